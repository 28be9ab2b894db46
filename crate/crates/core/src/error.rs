use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum KornError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("point ({rho}, {theta}, {z}) lies outside the washer")]
    OutsideDomain { rho: f64, theta: f64, z: f64 },

    #[error("non-finite value encountered while computing {0}")]
    NonFinite(String),

    #[error("quadrature rule has no nodes")]
    EmptyQuadrature,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("support violation: {0}")]
    Support(String),

    #[error("hypothesis `{hypothesis}` violated (measured {measured:.3e})")]
    Hypothesis { hypothesis: String, measured: f64 },

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("pencil is singular beyond deflation: {null_dim} additional null direction(s)")]
    SingularPencil { null_dim: usize },

    #[error("iteration stagnated after {iterations} steps (residual {residual:.3e})")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("linear solver did not converge (residual {residual:.3e})")]
    SolverNonConvergence { residual: f64 },

    #[error("task ({key}) failed: {source}")]
    Task {
        key: String,
        #[source]
        source: Box<KornError>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, KornError>;

pub(crate) fn ensure_finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(KornError::NonFinite(what.to_string()))
    }
}
