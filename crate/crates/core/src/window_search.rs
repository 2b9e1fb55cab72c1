//! Scanner for "good n" windows (all primes of [gn, gn+W] sit at tuple
//! offsets) and the sliding construction that converts a qualifying window
//! into an interval with exactly m primes.

use rayon::prelude::*;

use crate::admissible::LinearSystem;
use crate::error::{Error, Result};
use crate::prime_engine::{gcd, is_rough, PrimeTable};

/// Scan configuration: window length W = floor(5 lambda log x), smoothness
/// cut y (= floor(x^rho) or an explicit override), prime target m.
#[derive(Debug, Clone)]
pub struct ScanParams {
    pub w: u64,
    pub y: u64,
    pub m_target: u64,
    pub lambda: f64,
}

/// A certified window: every prime of [gn, gn+W] lies at a tuple offset and
/// at least `m_target` tuple forms are prime.
#[derive(Debug, Clone)]
pub struct GoodWindow {
    pub n: u64,
    pub w: u64,
    pub m_target: u64,
    /// offsets h_i with g n + h_i prime
    pub prime_offsets: Vec<u64>,
}

#[derive(Debug)]
pub struct ScanOutcome {
    pub windows: Vec<GoodWindow>,
    /// true iff lambda < 1/5, the condition guaranteeing pairwise disjoint
    /// windows; scans still run when it fails, with the flag lowered.
    pub disjoint_guaranteed: bool,
}

/// The three good-n conditions for a single n. Returns the certified window
/// or None.
pub fn check_conditions(
    n: u64,
    sys: &LinearSystem,
    sp: &ScanParams,
    table: &PrimeTable,
) -> Result<Option<GoodWindow>> {
    let hk = *sys.tuple.offsets().last().unwrap();
    if sp.w < hk {
        return Err(Error::ParameterInconsistency { w: sp.w, hk });
    }
    let base = sys.g * n;

    // every tuple form is free of small primes outside B
    for &h in sys.tuple.offsets() {
        if !is_rough(base + h, sp.y, sys.b) {
            return Ok(None);
        }
    }
    // every off-tuple h has a small prime in g n + h, or shares a
    // factor with g (the trivially-satisfied case)
    for h in 1..=sp.w {
        if sys.tuple.contains(h) {
            continue;
        }
        if gcd(h, sys.g) > 1 {
            continue; // a prime factor of g divides g n + h
        }
        if is_rough(base + h, sp.y, sys.b) {
            return Ok(None);
        }
    }
    // at least m primes among the tuple forms
    let prime_offsets: Vec<u64> = sys
        .tuple
        .offsets()
        .iter()
        .copied()
        .filter(|&h| table.is_prime(base + h))
        .collect();
    if (prime_offsets.len() as u64) < sp.m_target {
        return Ok(None);
    }
    Ok(Some(GoodWindow {
        n,
        w: sp.w,
        m_target: sp.m_target,
        prime_offsets,
    }))
}

/// All good n in (x, 2x], ascending. Chunked in parallel against the shared
/// table; output is deterministic and independent of chunking.
pub fn scan_good_n(
    sys: &LinearSystem,
    sp: &ScanParams,
    table: &PrimeTable,
) -> Result<ScanOutcome> {
    let x = sys.x_scale;
    let hk = *sys.tuple.offsets().last().unwrap();
    if sp.w < hk {
        return Err(Error::ParameterInconsistency { w: sp.w, hk });
    }
    const CHUNK: u64 = 1 << 14;
    let chunks: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut a = x + 1;
        while a <= 2 * x {
            v.push((a, (a + CHUNK - 1).min(2 * x)));
            a += CHUNK;
        }
        v
    };
    let per_chunk: Vec<Vec<GoodWindow>> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut found = Vec::new();
            for n in a..=b {
                if let Ok(Some(wdw)) = check_conditions(n, sys, sp, table) {
                    found.push(wdw);
                }
            }
            found
        })
        .collect();
    Ok(ScanOutcome {
        windows: per_chunk.into_iter().flatten().collect(),
        disjoint_guaranteed: sp.lambda < 0.2,
    })
}

/// One sliding run: the first j with exactly m primes in
/// `I_j = [N_j, N_j + lambda log N_j]`, N_j = g n + j.
#[derive(Debug, Clone)]
pub struct SlideResult {
    pub start_n: u64,
    pub j_star: u64,
    pub n_star: u64,
    pub count: u64,
    /// (j, prime count of I_j) for j = 0 ..= j_star
    pub trace: Vec<(u64, u64)>,
}

/// Interval right endpoint: floor(N + lambda log N) for integer N.
pub fn window_end(n: u64, lambda: f64) -> u64 {
    n + (lambda * (n as f64).ln()).floor() as u64
}

/// Walks j = 0 ..= floor(lambda log N_0) and returns the smallest j whose
/// interval holds exactly m primes. A missing j means a broken certification
/// upstream and is surfaced as an error.
pub fn slide_to_exact_m(
    n: u64,
    sys: &LinearSystem,
    lambda: f64,
    m: u64,
    table: &PrimeTable,
) -> Result<SlideResult> {
    let n0 = sys.g * n;
    let j_max = (lambda * (n0 as f64).ln()).floor() as u64;
    let mut trace = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let nj = n0 + j;
        let count = table.count_primes_in(nj, window_end(nj, lambda))?;
        trace.push((j, count));
        if count == m {
            return Ok(SlideResult {
                start_n: n,
                j_star: j,
                n_star: nj,
                count,
                trace,
            });
        }
    }
    Err(Error::CertificationFailure { j_max, m })
}

/// Full trace over j = 0 ..= floor(lambda log N_0), for step-lemma checks.
pub fn slide_trace(
    n0: u64,
    lambda: f64,
    table: &PrimeTable,
) -> Result<Vec<(u64, u64)>> {
    let j_max = (lambda * (n0 as f64).ln()).floor() as u64;
    let mut trace = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let nj = n0 + j;
        trace.push((j, table.count_primes_in(nj, window_end(nj, lambda))?));
    }
    Ok(trace)
}

/// Count of distinct N* values, all required `<= 5 x log x`. Duplicates signal
/// a disjointness violation upstream and error out.
pub fn exact_m_census_floor(results: &[SlideResult], x: u64) -> Result<u64> {
    let bound = (5.0 * x as f64 * (x as f64).ln()).floor() as u64;
    let mut seen = std::collections::BTreeSet::new();
    for r in results {
        if r.n_star > bound {
            return Err(Error::NStarOutOfBound {
                n_star: r.n_star,
                bound,
            });
        }
        if !seen.insert(r.n_star) {
            return Err(Error::DuplicateNStar { n_star: r.n_star });
        }
    }
    Ok(seen.len() as u64)
}
