use thiserror::Error;

/// Errors shared across the solvers and evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("endpoint iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoOneCutSolution { iterations: usize, residual: f64 },

    #[error("degenerate support: half-width {0:e} below tolerance")]
    DegenerateSupport(f64),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("requested accuracy not reached: {0}")]
    Accuracy(String),

    #[error("recurrence lost positivity at k = {k} (beta = {beta:e}); increase the node count")]
    Instability { k: usize, beta: f64 },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("truncated tail bound {bound:e} exceeds tolerance {tol:e}; lower the truncation point")]
    Truncation { bound: f64, tol: f64 },

    #[error("point is not critical: {0}")]
    NotCritical(String),

    #[error("edge is not regular: {0}")]
    NotRegularEdge(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
