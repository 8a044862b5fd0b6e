use thiserror::Error;

/// Errors raised by the estimation, detection and validation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no training samples")]
    NoTrainingSamples,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("insufficient samples: n = {n} < p = {p}")]
    InsufficientSamples { p: usize, n: usize },

    #[error("below noise floor: {0} < 1")]
    BelowNoiseFloor(f64),

    #[error("inside bulk: {value} <= {edge}")]
    InsideBulk { value: f64, edge: f64 },

    #[error("sub-critical spike: {value} <= 1 + sqrt(gamma) = {edge}")]
    SubCriticalSpike { value: f64, edge: f64 },

    #[error("complex pivot: T^2/4 - D = {0}")]
    ComplexPivot(f64),

    #[error("target in clutter subspace")]
    TargetInClutterSubspace,

    #[error("matrix is not positive definite (min eigenvalue {0})")]
    NotPositiveDefinite(f64),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigendecomposition did not converge")]
    NoConvergence,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by bad inputs or configuration rather than
    /// by the numerics themselves.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::InsufficientSamples { .. }
                | Error::NoTrainingSamples
                | Error::Format(_)
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
