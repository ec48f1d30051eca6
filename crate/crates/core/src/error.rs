use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    // data model
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("column `{0}` named by the schema is absent from the header")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label `{value}` is not 0 or 1 after mapping")]
    BadLabel { row: usize, value: String },
    #[error("row {row}: replication `{value}` is not in 1..=3")]
    BadReplication { row: usize, value: String },
    #[error("row {row}: gender `{value}` is not 0 or 1")]
    BadGender { row: usize, value: String },
    #[error("subject `{0}` has rows with conflicting label or gender")]
    InconsistentSubject(String),
    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),
    #[error("cannot split {units} grouping units into {k} folds")]
    TooFewUnits { k: usize, units: usize },
    #[error("feature `{0}` is constant over the fitting rows")]
    ConstantFeature(String),

    // feature selection
    #[error("zero variance{}", .0.as_deref().map(|n| format!(" in feature `{n}`")).unwrap_or_default())]
    ZeroVariance(Option<String>),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("feature index {index} out of range for {len} features")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("feature mask is empty")]
    EmptyFeatureSet,

    // learners
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data must contain both classes")]
    SingleClassTraining,
    #[error("model expects {expected} features, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },
    #[error("degenerate denominator H + lambda = {0}")]
    DegenerateDenominator(f64),
    #[error("malformed tree: {0}")]
    UnsupportedNode(String),
    #[error("label value {0} is not binary")]
    NonBinary(u8),

    // explanation and evaluation
    #[error("exact Shapley enumeration supports at most 20 features, got {0}")]
    TooManyFeatures(usize),
    #[error("background set is empty")]
    EmptyBackground,
    #[error("ROC needs at least one positive and one negative")]
    SingleClass,
    #[error("feature names differ between model and data: {0}")]
    SchemaMismatch(String),
    #[error("missing prerequisite: {0}")]
    MissingPrerequisite(String),
    #[error("internal invariant violated: {0}")]
    InvariantBreach(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
