use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty population")]
    EmptyPopulation,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid distribution parameters: {0}")]
    InvalidDistribution(String),

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("unknown method id `{0}`")]
    UnknownMethod(String),

    #[error("linear slope requires corner optimum")]
    LinearSlopeCorner,

    #[error("degenerate reference: reference equals trial on violated component {0}")]
    DegenerateReference(usize),

    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    NonSymmetric(usize, usize),

    #[error("invalid similarity matrix: {0}")]
    InvalidMatrix(String),

    #[error("empty run set")]
    EmptyRunSet,

    /// One message per offending field.
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    #[error("missing trajectories: {}", .0.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", "))]
    MissingArtifacts(Vec<PathBuf>),

    #[error("malformed telemetry: {0}")]
    MalformedTelemetry(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Configuration problems map to a distinct CLI exit code.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::UnknownFunction(_) | Error::UnknownMethod(_))
    }
}
