use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} sites vs {right} sites")]
    DimensionMismatch { left: usize, right: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("insufficient data: need {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("model order exceeds the scanned bound {0}")]
    OrderExceedsBound(usize),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("non-invertible model: {0}")]
    NonInvertible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
