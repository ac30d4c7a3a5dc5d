use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field is in the {found} domain, expected {expected}")]
    DomainMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("grids differ")]
    GridMismatch,
    #[error("invalid exponent {0}")]
    InvalidExponent(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular multiplier: lambda^2 = {0} sits on the frequency lattice")]
    SingularMultiplier(f64),
    #[error("extrapolation diverges: {0}")]
    Extrapolation(String),
    #[error("no convergence after {iterations} iterations (best relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
