use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input vector or matrix does not have the expected dimension.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Invalid problem data (bad constants, malformed spec, non-finite input).
    #[error("invalid input: {0}")]
    Input(String),

    /// An operation was called outside its contract (e.g. gradient of a
    /// nonsmooth function, subdifferential polytope of a smooth one).
    #[error("contract violation in {op}: {reason}")]
    Contract { op: &'static str, reason: String },

    /// A hard size guard was exceeded (vertex blowup, grid too large).
    #[error("capacity exceeded in {what}: limit {limit}")]
    Capacity { what: &'static str, limit: usize },

    /// An oracle returned a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An iterative routine hit its cap before reaching tolerance.
    #[error("{what} did not converge: residual {residual:.3e} after {iterations} iterations")]
    Convergence {
        what: &'static str,
        residual: f64,
        iterations: usize,
    },

    /// A precondition on the query point failed (e.g. infeasible point).
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
