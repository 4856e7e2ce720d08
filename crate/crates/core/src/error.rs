use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: no header line found")]
    MissingHeader { path: PathBuf },

    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    WidthMismatch {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("duplicate image id {0:?}")]
    DuplicateImage(String),

    #[error("unknown column {0:?}")]
    UnknownColumn(String),

    #[error("column {0:?} listed as both included and excluded")]
    OverlappingColumns(String),

    #[error("no usable features")]
    NoUsableFeatures,

    #[error("patient id pattern did not match image {0:?}")]
    PatientIdUnmatched(String),

    #[error("empty patient id for image {0:?}")]
    EmptyPatientId(String),

    #[error("patient {patient:?} has no value for {feature:?} and imputation is disabled")]
    MissingValue { patient: String, feature: String },

    #[error("feature {0:?} is missing for every patient")]
    FeatureAllMissing(String),

    #[error("zero variance in feature {0:?}")]
    ZeroVariance(String),

    #[error("need at least {needed} patients, found {found}")]
    TooFewPatients { needed: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid groups: {0}")]
    InvalidGroups(String),

    #[error("degenerate partition: {0}")]
    DegeneratePartition(String),

    #[error("label {label:?} has {found} members, need at least {needed}")]
    ClassTooSmall {
        label: String,
        found: usize,
        needed: usize,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}
