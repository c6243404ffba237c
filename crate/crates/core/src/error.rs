use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A position lies outside the box `[-L/2, L/2]`.
    #[error("position {x} lies outside the box [{lo}, {hi}]")]
    OutsideBox { x: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: state needs {needed} levels, matrix has {available}")]
    DimensionMismatch { needed: usize, available: usize },

    /// An iterative numerical procedure stopped before reaching its tolerance.
    #[error("{what} did not converge (achieved residual {residual:e})")]
    NonConvergence { what: String, residual: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
