use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty interval: left endpoint is not below the right endpoint")]
    EmptyInterval,
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("interval accumulates at 0; a positive min_abs is required")]
    InfiniteInterval,
    #[error("repeated knots are not allowed here")]
    RepeatedKnots,
    #[error("partition of length {len} exceeds level {level}")]
    PartitionTooLong { len: usize, level: usize },
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("unsupported case: {0}")]
    Unsupported(String),
    #[error("division by zero in {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;
