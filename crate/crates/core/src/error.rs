use thiserror::Error;

/// Errors raised by problem construction, solvers and verification helpers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point outside the domain of the objective: {0}")]
    Domain(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("line search failed at iteration {iteration} after {backtracks} backtracks")]
    LineSearchFailure { iteration: usize, backtracks: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("power iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("problem too large for exhaustive enumeration: {0}")]
    SizeGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
