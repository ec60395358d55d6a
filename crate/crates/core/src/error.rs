use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("report header mismatch: {0}")]
    Mismatch(String),
    #[error("unknown defect category {gdc_id:?}")]
    UnknownCategory { gdc_id: String },
    #[error("conflicting mapping for ({sca}, {original_type}): {first} vs {second}")]
    DuplicateConflict {
        sca: String,
        original_type: String,
        first: String,
        second: String,
    },
    #[error("no defect category mapped for ({sca}, {original_type}); extend the mapping file")]
    UnmappedType { sca: String, original_type: String },
    #[error("invalid beta {0:?}: must be a non-negative number or inf")]
    InvalidBeta(String),
    #[error("duplicate project {0:?}")]
    DuplicateProject(String),
    #[error("non-numeric cell {value:?} for feature {feature} of project {project}")]
    NonNumericCell {
        project: String,
        feature: String,
        value: String,
    },
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid component count {k} for a {n}x{d} matrix")]
    InvalidK { k: usize, n: usize, d: usize },
    #[error("too few samples: {samples} rows for {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("length mismatch: {truth} truth sets vs {preds} predictions")]
    LengthMismatch { truth: usize, preds: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
