use thiserror::Error;

/// Errors produced across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not an isometry (residual {residual:.3e})")]
    NotIsometry { residual: f64 },

    #[error("state is not rank one (second eigenvalue {second:.3e})")]
    NotRankOne { second: f64 },

    #[error("state is not maximally entangled (marginal residual {residual:.3e})")]
    NotMaxEntangled { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("invalid operation: {0}")]
    InvalidOperation(String),

    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),

    #[error("system mismatch: expected {expected}, found {found}")]
    SystemMismatch { expected: String, found: String },

    #[error("environment dimension {env_dim} is smaller than rank {rank}")]
    EnvironmentTooSmall { env_dim: usize, rank: usize },

    #[error("no effective falsifier exists: the hypothesis subspace is the whole space")]
    NoEffectiveFalsifier,

    #[error("effects do not sum to the identity (residual {residual:.3e})")]
    NotComplete { residual: f64 },

    #[error("no analytic average available for family {0}")]
    NoAnalyticForm(String),

    #[error("span construction failed: {0}")]
    SpanConstruction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("json: {0}")]
    Json(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
