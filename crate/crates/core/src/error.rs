use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {0} is out of range (must satisfy 1 <= n <= {1})")]
    IndexOutOfRange(u64, u64),

    #[error("{0} is not a prime in the site table")]
    NotPrime(u64),

    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    #[error("eigensolver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
