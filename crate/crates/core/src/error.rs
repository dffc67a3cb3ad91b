use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },

    #[error("time step produced a non-finite value at node {node}; the run is underresolved")]
    Underresolved { node: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("shooting bracket [{lo}, {hi}] does not straddle the ground state ({reason})")]
    BracketFailure { lo: f64, hi: f64, reason: String },

    #[error("ground-state residual {residual:.3e} exceeds tolerance {tol:.3e}; refine the ODE step or the working grid")]
    ToleranceUnreachable { residual: f64, tol: f64 },

    #[error("iteration did not converge after {iterations} iterations (last change {last:.3e})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("iteration collapsed to the trivial state")]
    TrivialFixedPoint,

    #[error("identity check `{name}` failed: residual {residual:.3e} > {tol:.3e}")]
    IdentityViolation {
        name: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("modulation fit did not converge in {iterations} Newton steps, residuals {residuals:?}")]
    ModulationFailure {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
