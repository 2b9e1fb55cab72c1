//! Segmented prime generation, primality and rough-number queries, and exact
//! multiplicative arithmetic functions (mu, phi, omega).

use crate::error::{Error, Result};

/// Default segment width: 2^22 odd entries per inner-loop pass.
const SEGMENT_ODD_BITS: u64 = 1 << 22;

/// Default memory budget for a single table, overridable via
/// `SIPL_MEMORY_BUDGET_MB`.
const DEFAULT_BUDGET_MB: u64 = 4096;

fn memory_budget_mb() -> u64 {
    std::env::var("SIPL_MEMORY_BUDGET_MB")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET_MB)
}

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Plain sieve of Eratosthenes; returns all primes `<= limit`.
pub fn simple_sieve(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for p in 2..=n {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q <= n {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

/// Deterministic trial-division primality. Used as the independent oracle
/// route and for cofactor checks in factorization.
pub fn trial_division_is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    if n.is_multiple_of(3) {
        return n == 3;
    }
    let mut d = 5;
    while d * d <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

/// Queryable primality store over a closed segment `[lo, hi]`.
///
/// Membership is stored one bit per odd integer; 2 is handled explicitly.
/// Immutable after build, safe for concurrent reads.
pub struct PrimeTable {
    lo: u64,
    hi: u64,
    first_odd: u64,
    bits: Vec<u64>,
    base_primes: Vec<u64>,
}

impl PrimeTable {
    /// Builds the table by segmented sieving with base primes `<= sqrt(hi)`.
    pub fn build(lo: u64, hi: u64) -> Result<PrimeTable> {
        if lo < 2 || lo > hi {
            return Err(Error::InvalidRange { lo, hi });
        }
        let odd_count = (hi - lo) / 2 + 1;
        let budget_mb = memory_budget_mb();
        if odd_count / 8 > budget_mb.saturating_mul(1 << 20) {
            return Err(Error::RangeTooLarge { lo, hi, budget_mb });
        }
        let base_primes = simple_sieve(isqrt(hi));
        let first_odd = if lo.is_multiple_of(2) { lo + 1 } else { lo };
        let n_bits = if first_odd > hi {
            0
        } else {
            (hi - first_odd) / 2 + 1
        };
        // bit i == true  <=>  first_odd + 2i is composite (or 1)
        let mut bits = vec![0u64; n_bits.div_ceil(64) as usize];

        let mut seg_start = first_odd;
        while seg_start <= hi && n_bits > 0 {
            let seg_end = (seg_start + 2 * (SEGMENT_ODD_BITS - 1)).min(hi);
            for &p in base_primes.iter().skip(1) {
                // first odd multiple of p that is >= max(p*p, seg_start)
                let mut start = p * p;
                if start < seg_start {
                    start = seg_start + (p - seg_start % p) % p;
                    if start % 2 == 0 {
                        start += p;
                    }
                }
                if start > seg_end {
                    continue;
                }
                let mut q = start;
                while q <= seg_end {
                    let idx = ((q - first_odd) / 2) as usize;
                    bits[idx / 64] |= 1 << (idx % 64);
                    q += 2 * p;
                }
            }
            seg_start = seg_end + 2;
        }
        if first_odd == 1 {
            bits[0] |= 1;
        }
        // odd base primes below sqrt(hi) whose square marking would wrongly
        // leave them unmarked are already correct: p itself is never crossed.
        // p = first_odd == p*p case handled since crossing starts at p*p only
        // when p*p >= seg_start and p*p != p.
        Ok(PrimeTable {
            lo,
            hi,
            first_odd,
            bits,
            base_primes,
        })
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn base_primes(&self) -> &[u64] {
        &self.base_primes
    }

    /// Primality of `n`. Panics when `n` is outside `[lo, hi]`.
    pub fn is_prime(&self, n: u64) -> bool {
        assert!(
            n >= self.lo && n <= self.hi,
            "query {n} outside table range [{}, {}]",
            self.lo,
            self.hi
        );
        if n.is_multiple_of(2) {
            return n == 2;
        }
        let idx = ((n - self.first_odd) / 2) as usize;
        self.bits[idx / 64] & (1 << (idx % 64)) == 0
    }

    /// `|[a, b] ∩ ℙ|`, both endpoints included.
    pub fn count_primes_in(&self, a: u64, b: u64) -> Result<u64> {
        if a < self.lo || b > self.hi || a > b {
            return Err(Error::OutOfRange {
                a,
                b,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let mut count = 0;
        if a <= 2 && 2 <= b {
            count += 1;
        }
        let mut n = if a.is_multiple_of(2) { a + 1 } else { a };
        while n <= b {
            let idx = ((n - self.first_odd) / 2) as usize;
            if self.bits[idx / 64] & (1 << (idx % 64)) == 0 {
                count += 1;
            }
            n += 2;
        }
        Ok(count)
    }

    /// All primes in `[a, b]`, ascending.
    pub fn primes_in(&self, a: u64, b: u64) -> Result<Vec<u64>> {
        if a < self.lo || b > self.hi || a > b {
            return Err(Error::OutOfRange {
                a,
                b,
                lo: self.lo,
                hi: self.hi,
            });
        }
        let mut out = Vec::new();
        if a <= 2 && 2 <= b {
            out.push(2);
        }
        let mut n = if a.is_multiple_of(2) { a + 1 } else { a };
        while n <= b {
            let idx = ((n - self.first_odd) / 2) as usize;
            if self.bits[idx / 64] & (1 << (idx % 64)) == 0 {
                out.push(n);
            }
            n += 2;
        }
        Ok(out)
    }
}

/// Exact factorization of `n` as sorted `(prime, exponent)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    pub fn mu(&self) -> i8 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn phi(&self) -> u64 {
        let mut phi = self.n;
        for &(p, _) in &self.factors {
            phi = phi / p * (p - 1);
        }
        phi
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.iter().all(|&(_, e)| e == 1)
    }

    /// All divisors of `n`, unsorted.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let prev = divs.clone();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                divs.extend(prev.iter().map(|d| d * pk));
            }
        }
        divs
    }
}

/// Trial-division factorization; intended for n up to ~10^12.
pub fn factorize(n: u64) -> Factorization {
    assert!(n >= 1, "factorize requires n >= 1");
    let mut m = n;
    let mut factors = Vec::new();
    let mut push = |p: u64, m: &mut u64| {
        let mut e = 0;
        while (*m).is_multiple_of(p) {
            *m /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    };
    push(2, &mut m);
    push(3, &mut m);
    let mut d = 5;
    while d * d <= m {
        push(d, &mut m);
        push(d + 2, &mut m);
        d += 6;
    }
    if m > 1 {
        debug_assert!(trial_division_is_prime(m));
        factors.push((m, 1));
    }
    Factorization { n, factors }
}

/// `(mu(n), phi(n), omega(n))` computed exactly from the factorization.
pub fn arithmetic_functions(n: u64) -> (i8, u64, u32) {
    let f = factorize(n);
    (f.mu(), f.phi(), f.omega())
}

/// `true` iff every prime factor p of n satisfies `p > y` or `p | b`.
///
/// This is membership in S(rho, B) with y standing for the smoothness cut
/// x^rho. `is_rough(1, _, _)` is vacuously true.
pub fn is_rough(n: u64, y: u64, b: u64) -> bool {
    assert!(n >= 1 && y >= 1 && b >= 1);
    let mut m = n;
    let check = |p: u64, m: &mut u64| -> bool {
        if !(*m).is_multiple_of(p) {
            return true;
        }
        while (*m).is_multiple_of(p) {
            *m /= p;
        }
        p > y || b.is_multiple_of(p)
    };
    if !check(2, &mut m) || !check(3, &mut m) {
        return false;
    }
    let mut d = 5;
    while d * d <= m {
        if !check(d, &mut m) || !check(d + 2, &mut m) {
            return false;
        }
        d += 6;
    }
    // remaining cofactor is 1 or prime
    m == 1 || m > y || b.is_multiple_of(m)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}
