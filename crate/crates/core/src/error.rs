use thiserror::Error;

/// Errors surfaced by the library. Domain errors name the violated
/// precondition so the CLI can report them verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid range: lo={lo} > hi={hi}")]
    InvalidRange { lo: u64, hi: u64 },

    #[error("segment [{lo}, {hi}] exceeds the memory budget of {budget_mb} MiB")]
    RangeTooLarge { lo: u64, hi: u64, budget_mb: u64 },

    #[error("query [{a}, {b}] outside table range [{lo}, {hi}]")]
    OutOfRange { a: u64, b: u64, lo: u64, hi: u64 },

    #[error("invalid tuple: {0}")]
    InvalidTuple(String),

    #[error("invalid linear system: {0}")]
    InvalidSystem(String),

    #[error("no prime g in (log x, 2 log x] distinct from B={b} for x={x}")]
    NoCandidateG { x: u64, b: u64 },

    #[error("insufficient survivors: have {have}, need {need}")]
    InsufficientSurvivors { have: u64, need: u64 },

    #[error("tuple is not admissible: residues cover all classes mod {p}")]
    NonAdmissible { p: u64 },

    #[error("parameter inconsistency: window W={w} smaller than largest offset {hk}")]
    ParameterInconsistency { w: u64, hk: u64 },

    #[error("certification failure: no j <= {j_max} gives exactly {m} primes (broken precondition upstream)")]
    CertificationFailure { j_max: u64, m: u64 },

    #[error("duplicate N*={n_star}: disjointness violated upstream")]
    DuplicateNStar { n_star: u64 },

    #[error("N*={n_star} exceeds the 5 x log x bound {bound}")]
    NStarOutOfBound { n_star: u64, bound: u64 },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
