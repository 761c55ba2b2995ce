use thiserror::Error;

/// Errors raised by the discretization, solvers and optimizer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {value} lies outside the knot range [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid refinement request: {0}")]
    Refinement(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Solver(_) | Error::NonFinite(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
