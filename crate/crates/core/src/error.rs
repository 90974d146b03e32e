use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The argument sits (numerically) on a zero of `J_ν`.
    #[error("pole: J_{nu} vanishes at s = {s}")]
    Pole { nu: f64, s: f64 },

    #[error("value out of the supported floating-point range: {0}")]
    OutOfRange(String),

    /// Expected sign change was not found.
    #[error("bracketing failed: {0}")]
    NoBracket(String),

    /// The two bracketing poles coincide (`a = b`); use the analytic limit.
    #[error("degenerate bracket: {0}")]
    DegenerateBracket(String),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("inconsistent rearrangement inputs: {0}")]
    Inconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
