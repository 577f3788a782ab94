use thiserror::Error;

#[derive(Debug, Error)]
pub enum KwError {
    #[error("degenerate rotation axis")]
    DegenerateAxis,

    #[error("boundary evaluation: y = {y} is not in the open half-line")]
    BoundaryEvaluation { y: f64 },

    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("calibration inconsistent: {0}")]
    CalibrationInconsistent(String),

    #[error("empty suite")]
    EmptySuite,

    #[error("non-finite integrand sample at y = {y}")]
    NonFiniteIntegrand { y: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("{which} exponent integral diverges")]
    DivergentExponent { which: &'static str },

    #[error("not a solution: identity chain does not apply (residual {residual:e} at y = {y})")]
    NotASolution { residual: f64, y: f64 },

    #[error("perturbation is not O(y) at the boundary: {0}")]
    PerturbationOrder(String),

    #[error("inconsistent series matching at order {order}: {reason}")]
    SeriesMatching { order: i32, reason: String },

    #[error("blow-up at y = {y} (|state| = {norm:e})")]
    BlowUp { y: f64, norm: f64 },

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("decay manifold not bracketed: {0}")]
    NotBracketed(String),

    #[error("invalid profile data: {0}")]
    ProfileData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = KwError> = std::result::Result<T, E>;
