use thiserror::Error;

/// Errors raised by the solver stack.
#[derive(Debug, Error)]
pub enum KgmError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field does not belong to this grid (expected {expected} nodes, got {actual})")]
    GridMismatch { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// The screening coefficient q²u² vanishes, so constants lie in the kernel.
    #[error("degenerate screening: integral of u^2 is {integral:e}, the screened problem has no unique solution")]
    DegenerateScreening { integral: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("line search failed: step fell below {step:e}")]
    LineSearchFailed { step: f64 },

    #[error("mountain-pass path collapsed: maximizer sits at path index {index}")]
    PathCollapse { index: usize },

    #[error("no endpoint with negative energy found up to t = {t:e}")]
    EndpointNotFound { t: f64 },

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = KgmError> = std::result::Result<T, E>;
