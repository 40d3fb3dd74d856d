use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular covariance (reciprocal condition {rcond:.3e})")]
    SingularCovariance { rcond: f64 },
    #[error("ill-conditioned Fisher information (|J12|^2 exceeds J11*J22 by {excess:.3e})")]
    IllConditionedFim { excess: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("model too large for dense evaluation: {size} samples (limit {limit})")]
    TooLarge { size: usize, limit: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
