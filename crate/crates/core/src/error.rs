use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: expected {expected} nodes, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("supercritical blow-up at t = {t} (norm {norm:e})")]
    BlowUp { t: f64, norm: f64 },

    #[error("neighborhood of radius {radius} not reached within the trajectory")]
    NotReached { radius: f64 },

    #[error("configuration is supercritical (product {product} >= 1)")]
    Supercritical { product: f64 },

    #[error("internal invariant breached: {0}")]
    InvariantBreach(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
