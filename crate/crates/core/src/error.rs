use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be at least 2, got {0}")]
    InvalidDimension(usize),

    #[error("index ({k}, {l}) out of range for d = {d}")]
    IndexOutOfRange { d: usize, k: usize, l: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite matrix or vector entry")]
    NonFinite,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid mutually unbiased basis set: {0}")]
    InvalidMubSet(String),

    #[error("no built-in mutually unbiased bases for d = {0}")]
    UnsupportedMubDimension(usize),

    #[error("hermitian eigensolver did not converge")]
    Eigensolver,

    #[error("singular value decomposition did not converge")]
    Svd,

    #[error("hull solver failed: {0}")]
    HullSolver(String),

    #[error("witness certification failed: {0}")]
    Certification(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource error at {path}: {message}")]
    Resource { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}
