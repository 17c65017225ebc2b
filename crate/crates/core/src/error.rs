//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::wire::WireError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("schema mismatch in {dimension}: expected {expected}, got {got}")]
    SchemaMismatch {
        dimension: &'static str,
        expected: String,
        got: String,
    },

    #[error("sample {sample_id}: non-finite value in metric {metric} at timestep {timestep}")]
    NonFinite {
        sample_id: String,
        metric: String,
        timestep: usize,
    },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid class probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("unknown class {0:?}")]
    UnknownClass(String),

    #[error("distractor {distractor_id} has f_c = {probability} below target {target}")]
    DistractorBelowTarget {
        distractor_id: String,
        probability: f64,
        target: f64,
    },

    #[error("no valid distractor for class {class:?}: no correctly classified training sample of that class exists, so no explanation can be produced with a training-set distractor")]
    NoDistractor { class: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training labels contain a single class ({0:?}); both classes are required")]
    SingleClass(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sample {0:?} not found")]
    MissingSample(String),

    #[error("set-cover input is not binary: {0}")]
    NonBinary(String),

    #[error("universe of size {size} exceeds the exhaustive search bound of {max}")]
    UniverseTooLarge { size: usize, max: usize },

    #[error("every neighbor is at distance 0 from the test sample")]
    DegenerateNeighbors,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Wire(#[from] WireError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the command line error objects.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSchema(_) | Error::SchemaMismatch { .. } => "schema",
            Error::NonFinite { .. } => "non-finite",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidProbabilities(_) => "invalid-probabilities",
            Error::UnknownClass(_) => "unknown-class",
            Error::DistractorBelowTarget { .. } => "distractor-below-target",
            Error::NoDistractor { .. } => "no-distractor",
            Error::EmptyDataset => "empty-dataset",
            Error::SingleClass(_) => "single-class",
            Error::InvalidConfig(_) => "invalid-config",
            Error::MissingSample(_) => "missing-sample",
            Error::NonBinary(_) => "non-binary",
            Error::UniverseTooLarge { .. } => "universe-too-large",
            Error::DegenerateNeighbors => "degenerate-neighbors",
            Error::Parse { .. } => "parse",
            Error::Wire(e) => e.code(),
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
