//! Computational laboratory for prime statistics in short intervals
//! [n, n + lambda log n]: segmented prime tables, admissible offset tuples,
//! exact sieve-sum arithmetic, a good-window scanner with the sliding
//! construction, and the census against the Poisson heuristic.

pub mod admissible;
pub mod census;
pub mod error;
pub mod prime_engine;
pub mod sieve_bounds;
pub mod window_search;

pub use error::{Error, Result};
