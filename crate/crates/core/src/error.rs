use thiserror::Error;

/// Errors raised by the quantized CP routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum QcpError {
    #[error("linear index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("digit {0} is not a valid binary mode index (expected 1 or 2)")]
    InvalidDigit(u8),

    #[error("order must be at least 1 and at most {max}, got {order}")]
    InvalidOrder { order: usize, max: usize },

    #[error("vector length {len} is not 2^{order}")]
    LengthMismatch { len: usize, order: usize },

    #[error("order mismatch: expected {expected}, got {actual}")]
    OrderMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid sample set: {0}")]
    InvalidSamples(String),

    #[error("linear solve failed after regularization up to {max_level:e}")]
    SolverFailure { max_level: f64 },

    #[error("malformed model file: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QcpError>;
