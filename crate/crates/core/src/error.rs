use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant names the operation that failed and, where it applies,
/// the precondition that was violated.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: domain error: {reason}")]
    Domain { op: &'static str, reason: String },

    #[error("{op}: invalid parameter `{name}`: {reason}")]
    InvalidParam {
        op: &'static str,
        name: &'static str,
        reason: String,
    },

    #[error("{op}: no solution: {reason}")]
    NoSolution { op: &'static str, reason: String },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {panels} panels")]
    Quadrature {
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("integrator step failure: {0}")]
    StepFailure(String),

    #[error("{op}: no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        op: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("{op}: iterate left the positive cone at iteration {iteration}")]
    PositivityLoss { op: &'static str, iteration: usize },

    #[error("grid mismatch: {0} vs {1} points")]
    GridMismatch(usize, usize),

    #[error("{op}: operator is near singular (|tau| = {tau:e} below {tol:e})")]
    NearSingular { op: &'static str, tau: f64, tol: f64 },

    #[error("{op}: degenerate configuration: {reason}")]
    Degenerate { op: &'static str, reason: String },

    #[error("insufficient data: {got} converged points, need {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("singular linear system at pivot {0}")]
    SingularMatrix(usize),

    #[error("coefficient table: {0}")]
    Table(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        op,
        reason: reason.into(),
    }
}
