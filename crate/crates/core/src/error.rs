use thiserror::Error;

/// Errors surfaced by generator construction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("seed length mismatch: expected {expected} bits, got {got}")]
    SeedLength { expected: usize, got: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("base-generator calibration failed: {0}")]
    Calibration(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
