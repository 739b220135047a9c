use thiserror::Error;

use crate::topology::TopologyViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace:.3e} is not positive")]
    TraceNonPositive { trace: f64 },

    #[error("trace {trace} is not 1")]
    TraceNotUnit { trace: f64 },

    #[error("Kraus completeness violated (residual {residual:.3e})")]
    CompletenessViolated { residual: f64 },

    #[error("map is not completely positive (Choi min eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("operator lies outside the algebra span (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },

    #[error("span is not a *-algebra: {0}")]
    NotStarAlgebra(String),

    #[error("gate `{name}` annihilates some state (min eigenvalue of a*a = {min_eigenvalue:.3e})")]
    GateOutsideCheckA { name: String, min_eigenvalue: f64 },

    #[error(transparent)]
    Topology(#[from] TopologyViolation),

    #[error("isotony violated for {inner} in {outer} (residual {residual:.3e})")]
    IsotonyViolation {
        outer: String,
        inner: String,
        residual: f64,
    },

    #[error("restriction from {outer} to {inner} is not a density operator: {reason}")]
    RestrictionNotDensity {
        outer: String,
        inner: String,
        reason: String,
    },

    #[error("{inner} is not contained in {outer}")]
    NotNested { outer: String, inner: String },

    #[error("open set {0} is not a member of the cover")]
    NotInCover(String),

    #[error("boundary condition violated: {0}")]
    BoundaryCondition(String),

    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
