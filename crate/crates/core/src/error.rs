use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unphysical input: {0}")]
    Unphysical(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical procedure failed or a consistency check did not hold.
    #[error("numerical diagnostic: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
