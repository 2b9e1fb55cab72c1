//! Admissible offset tuples: verification, the greedy survivor construction,
//! the multiplier g, and exact counting bounds.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::prime_engine::{gcd, simple_sieve, trial_division_is_prime};

/// A sorted admissible-candidate set `h_1 < ... < h_k` of offsets, all in
/// `(0, W)`. W plays the role of the window length (lambda log x, or five
/// times it, depending on context).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleH {
    offsets: Vec<u64>,
    window: u64,
}

impl TupleH {
    pub fn new(offsets: Vec<u64>, window: u64) -> Result<TupleH> {
        if offsets.is_empty() {
            return Err(Error::InvalidTuple("empty offset list".into()));
        }
        for w in offsets.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidTuple(format!(
                    "offsets not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        if offsets[0] == 0 {
            return Err(Error::InvalidTuple("offsets must be positive".into()));
        }
        let hk = *offsets.last().unwrap();
        if hk >= window {
            return Err(Error::InvalidTuple(format!(
                "largest offset {hk} not below window {window}"
            )));
        }
        Ok(TupleH { offsets, window })
    }

    pub fn offsets(&self) -> &[u64] {
        &self.offsets
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn k(&self) -> u64 {
        self.offsets.len() as u64
    }

    pub fn contains(&self, h: u64) -> bool {
        self.offsets.binary_search(&h).is_ok()
    }

    /// Number of distinct residues of the offsets mod p.
    pub fn distinct_residues_mod(&self, p: u64) -> u64 {
        let mut seen = vec![false; p as usize];
        let mut count = 0;
        for &h in &self.offsets {
            let r = (h % p) as usize;
            if !seen[r] {
                seen[r] = true;
                count += 1;
            }
        }
        count
    }
}

/// The linear forms `{g n + h_i}` with multiplier g and exceptional modulus B.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub g: u64,
    pub b: u64,
    pub tuple: TupleH,
    pub x_scale: u64,
}

impl LinearSystem {
    /// Validates: g squarefree, coprime to B, and `log x < g <= 2 log x`.
    pub fn new(g: u64, b: u64, tuple: TupleH, x_scale: u64) -> Result<LinearSystem> {
        if !crate::prime_engine::factorize(g).is_squarefree() {
            return Err(Error::InvalidSystem(format!("g={g} is not squarefree")));
        }
        if gcd(g, b) != 1 {
            return Err(Error::InvalidSystem(format!("gcd(g={g}, B={b}) > 1")));
        }
        let lx = (x_scale as f64).ln();
        if !((g as f64) > lx && (g as f64) <= 2.0 * lx) {
            return Err(Error::InvalidSystem(format!(
                "g={g} outside (log x, 2 log x] = ({lx:.4}, {:.4}] for x={x_scale}",
                2.0 * lx
            )));
        }
        Ok(LinearSystem { g, b, tuple, x_scale })
    }
}

/// `true` iff for every prime `p <= k` the residues `{h_i mod p}` leave at
/// least one class mod p uncovered. Primes `p > k` cannot be covered by k
/// residues, so only `p <= k` need checking.
pub fn is_admissible(t: &TupleH) -> bool {
    let k = t.k();
    for p in simple_sieve(k) {
        if t.distinct_residues_mod(p) == p {
            return false;
        }
    }
    true
}

/// Greedy residue sieve over `[1, W-1]`: for each prime `p <= k` in turn,
/// remove the residue class mod p currently containing the fewest elements.
/// Ties break toward the smallest residue.
pub fn greedy_survivors(w: u64, k: u64) -> Vec<u64> {
    assert!(w >= 2, "greedy_survivors requires W >= 2");
    let mut survivors: Vec<u64> = (1..w).collect();
    for p in simple_sieve(k) {
        let mut class_sizes = vec![0u64; p as usize];
        for &h in &survivors {
            class_sizes[(h % p) as usize] += 1;
        }
        let (victim, _) = class_sizes
            .iter()
            .enumerate()
            .min_by_key(|&(r, &s)| (s, r))
            .unwrap();
        survivors.retain(|&h| (h % p) as usize != victim);
    }
    survivors
}

/// Exact rational `W * prod_{p <= k} (1 - 1/p)`.
pub fn survivor_bound(w: u64, k: u64) -> BigRational {
    let mut r = BigRational::from_integer(BigUint::from(w).into());
    for p in simple_sieve(k) {
        r *= BigRational::new(
            BigUint::from(p - 1).into(),
            BigUint::from(p).into(),
        );
    }
    r
}

/// Smallest prime g with `log x < g <= 2 log x` and `g != B`.
pub fn choose_g(x: u64, b: u64) -> Result<u64> {
    let lx = (x as f64).ln();
    let lower = lx.floor() as u64; // first candidate is lower+1 if lower+1 > lx
    let upper = (2.0 * lx).floor() as u64;
    let mut g = lower.max(1);
    while (g as f64) <= lx {
        g += 1;
    }
    while g <= upper {
        if g != b && trial_division_is_prime(g) {
            return Ok(g);
        }
        g += 1;
    }
    Err(Error::NoCandidateG { x, b })
}

/// Exact `C(survivor_count, k)` plus the evaluated lower bound
/// `k^{-k} (survivor_count - k)^k`.
pub fn tuple_count_bound(survivor_count: u64, k: u64) -> Result<(BigUint, f64)> {
    if survivor_count < k {
        return Err(Error::InsufficientSurvivors {
            have: survivor_count,
            need: k,
        });
    }
    let mut binom = BigUint::one();
    for i in 0..k {
        binom = binom * BigUint::from(survivor_count - i) / BigUint::from(i + 1);
    }
    let bound = ((survivor_count - k) as f64 / k as f64).powi(k as i32);
    Ok((binom, bound))
}

/// Count of primes `<= k` (pi(k)), the floor slack in the survivor bound.
pub fn prime_count_upto(k: u64) -> u64 {
    simple_sieve(k).len() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn tuple(offsets: &[u64], w: u64) -> TupleH {
        TupleH::new(offsets.to_vec(), w).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(&tuple(&[2, 6, 8], 10)));
        assert!(!is_admissible(&tuple(&[1, 2], 10)));
        assert!(!is_admissible(&tuple(&[2, 4, 6], 10)));
    }

    #[test]
    fn tuple_validation() {
        assert!(TupleH::new(vec![], 10).is_err());
        assert!(TupleH::new(vec![0, 2], 10).is_err());
        assert!(TupleH::new(vec![2, 2], 10).is_err());
        assert!(TupleH::new(vec![2, 10], 10).is_err());
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(greedy_survivors(11, 2), vec![1, 3, 5, 7, 9]);
        assert_eq!(greedy_survivors(8, 1), vec![1, 2, 3, 4, 5, 6, 7]);
        // W=30, k=3: bound floor(29 * 1/2 * 2/3) - pi(3) = 7
        let s = greedy_survivors(30, 3);
        assert!(s.len() as u64 >= 7, "survivors {s:?}");
    }

    #[test]
    fn survivor_bound_examples() {
        assert_eq!(survivor_bound(100, 2), BigRational::from_integer(50.into()));
        assert_eq!(
            survivor_bound(100, 5),
            BigRational::new(80.into(), 3.into())
        );
        assert_eq!(
            survivor_bound(1000, 10),
            BigRational::new(1600.into(), 7.into())
        );
    }

    #[test]
    fn greedy_survivor_lower_bound() {
        for w in [100u64, 1000] {
            for k in [2u64, 3, 5, 10, 30] {
                let s = greedy_survivors(w, k) .len() as u64;
                let bound = survivor_bound(w - 1, k).floor().to_integer().to_u64().unwrap();
                let slack = prime_count_upto(k);
                assert!(
                    s + slack >= bound,
                    "W={w} k={k}: |S|={s} < {bound} - {slack}"
                );
            }
        }
    }

    #[test]
    fn choose_g_examples() {
        assert_eq!(choose_g(1_000_000, 1).unwrap(), 17);
        assert_eq!(choose_g(1_000_000, 17).unwrap(), 19);
        assert_eq!(choose_g(22026, 1).unwrap(), 11);
        assert_eq!(choose_g(10_000, 1).unwrap(), 11);
        assert!(choose_g(3, 2).is_err());
    }

    #[test]
    fn tuple_count_examples() {
        let (b, bound) = tuple_count_bound(5, 2).unwrap();
        assert_eq!(b, BigUint::from(10u32));
        assert!((bound - 2.25).abs() < 1e-12);
        let (b, bound) = tuple_count_bound(10, 3).unwrap();
        assert_eq!(b, BigUint::from(120u32));
        assert!((bound - 343.0 / 27.0).abs() < 1e-9);
        let (b, bound) = tuple_count_bound(4, 4).unwrap();
        assert_eq!(b, BigUint::from(1u32));
        assert_eq!(bound, 0.0);
        assert!(tuple_count_bound(3, 4).is_err());
    }

    #[test]
    fn linear_system_validation() {
        let t = tuple(&[2, 6, 8], 46);
        assert!(LinearSystem::new(17, 1, t.clone(), 1_000_000).is_ok());
        assert!(LinearSystem::new(18, 1, t.clone(), 1_000_000).is_err()); // not squarefree
        assert!(LinearSystem::new(17, 34, t.clone(), 1_000_000).is_err()); // shares factor
        assert!(LinearSystem::new(5, 1, t, 1_000_000).is_err()); // below log x
    }

    // every k-subset of the survivor set is admissible (exhaustive, small)
    #[test]
    fn survivor_subsets_admissible() {
        for w in [20u64, 40, 60] {
            for k in [2u64, 3, 4] {
                let s = greedy_survivors(w, k);
                let n = s.len();
                if n < k as usize {
                    continue;
                }
                let kk = k as usize;
                let mut idx: Vec<usize> = (0..kk).collect();
                loop {
                    let offs: Vec<u64> = idx.iter().map(|&i| s[i]).collect();
                    let t = TupleH::new(offs, w).unwrap();
                    assert!(is_admissible(&t), "W={w} k={k} subset {:?}", t.offsets());
                    // next combination in lexicographic order
                    let mut advanced = false;
                    for i in (0..kk).rev() {
                        if idx[i] != i + n - kk {
                            idx[i] += 1;
                            for j in i + 1..kk {
                                idx[j] = idx[j - 1] + 1;
                            }
                            advanced = true;
                            break;
                        }
                    }
                    if !advanced {
                        break;
                    }
                }
            }
        }
    }

    // brute-force equivalence of is_admissible on small subsets of [1, 50]
    #[test]
    fn admissibility_brute_force_equivalence() {
        fn brute(offsets: &[u64]) -> bool {
            for p in simple_sieve(50) {
                let mut covered = vec![false; p as usize];
                for &h in offsets {
                    covered[(h % p) as usize] = true;
                }
                if covered.iter().all(|&c| c) {
                    return false;
                }
            }
            true
        }
        // deterministic sweep over 3-subsets of a spread-out sample
        let sample: Vec<u64> = (1..=50).step_by(3).collect();
        for i in 0..sample.len() {
            for j in i + 1..sample.len() {
                for l in j + 1..sample.len() {
                    let offs = vec![sample[i], sample[j], sample[l]];
                    let t = TupleH::new(offs.clone(), 51).unwrap();
                    assert_eq!(is_admissible(&t), brute(&offs), "{offs:?}");
                }
            }
        }
    }

    // translation by multiples of prod_{p<=k} p preserves admissibility
    #[test]
    fn translation_invariance() {
        let primorial = 2 * 3; // k = 3
        for base in [[2u64, 6, 8], [4, 6, 10], [2, 8, 12]] {
            let t0 = TupleH::new(base.to_vec(), 1000).unwrap();
            for mult in 1..5u64 {
                let shifted: Vec<u64> = base.iter().map(|h| h + mult * primorial).collect();
                let t1 = TupleH::new(shifted, 1000).unwrap();
                assert_eq!(is_admissible(&t0), is_admissible(&t1));
            }
        }
    }
}
