//! Error type shared by the tensor, decomposition, and evaluation modules.

use thiserror::Error;

/// Errors produced by tensor kernels, decompositions, and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid mode {mode} for order-{order} tensor")]
    InvalidMode { mode: usize, order: usize },
    #[error("rank {rank} exceeds extent {extent} in mode {mode}")]
    RankExceedsExtent {
        mode: usize,
        rank: usize,
        extent: usize,
    },
    #[error("non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("tensor must have order >= 1 and every extent >= 1")]
    EmptyShape,
    #[error("data length {got} does not match shape product {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix is numerically singular (pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("weight tensor has no nonzero entries")]
    AllZeroWeights,
    #[error("weight entries must lie in [0, 1], found {value}")]
    WeightOutOfRange { value: f64 },
    #[error("negative entry {value} at flat index {index} under nonnegativity constraints")]
    NegativeData { index: usize, value: f64 },
    #[error("could not draw a factor without a zero column after {retries} retries")]
    ZeroColumnRetry { retries: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
