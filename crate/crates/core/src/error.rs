use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e}, floor {floor:e})")]
    NotPositiveDefinite { min_eig: f64, floor: f64 },

    #[error("row-norm bounds are infeasible: lower {lower} > upper {upper}")]
    BoundsInfeasible { lower: f64, upper: f64 },

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("objective diverged: {value:e} exceeds limit {limit:e}")]
    Diverged { value: f64, limit: f64 },

    #[error("non-finite parameter at iteration {0}")]
    NonFinite(usize),

    #[error("elbow selection needs at least 3 candidates, got {0}")]
    TooFewCandidates(usize),

    #[error("every grid point failed")]
    AllGridPointsFailed,

    #[error("degenerate truth graph: {0}")]
    DegenerateTruth(&'static str),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::BoundsInfeasible { .. } => "BoundsInfeasible",
            Error::RankDeficient(_) => "RankDeficient",
            Error::Diverged { .. } => "Diverged",
            Error::NonFinite(_) => "NonFinite",
            Error::TooFewCandidates(_) => "TooFewCandidates",
            Error::AllGridPointsFailed => "AllGridPointsFailed",
            Error::DegenerateTruth(_) => "DegenerateTruth",
            Error::InvalidConfig { .. } | Error::Schema { .. } => "SchemaError",
            Error::File { .. } => "FileError",
            Error::Csv(_) => "FileError",
            Error::Json(_) => "SchemaError",
        }
    }

    /// Offending field for configuration errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::InvalidConfig { field, .. } | Error::Schema { field, .. } => Some(field),
            _ => None,
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
