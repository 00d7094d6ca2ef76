use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry norm {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semi-definite (eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("matrix is rank deficient (eigenvalue {0:.3e})")]
    RankDeficient(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {dim} exceeds the brute-force cap {cap}; use the closed-form path")]
    CapExceeded { dim: usize, cap: usize },

    #[error("sequence too short: need at least {needed} values, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("POVM elements are not complete (defect {0:.3e})")]
    IncompletePovm(f64),

    #[error("eigendecomposition failed: {0}")]
    Decomposition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
