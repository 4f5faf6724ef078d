//! Error taxonomy shared by every stage of the toolkit.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violated a precondition (non-finite, out of range, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A stage did not have enough data to produce a meaningful result.
    #[error("insufficient data in {stage}: {detail}")]
    InsufficientData { stage: &'static str, detail: String },

    /// Malformed input file; `offset` is the byte position where parsing stopped.
    #[error("parse error in {path} at byte {offset}: {detail}")]
    Parse {
        path: PathBuf,
        offset: u64,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Configuration rejected; `field` names the offending key.
    #[error("config error in `{field}`: {detail}")]
    Config { field: String, detail: String },

    /// Patch covariance was rank-deficient; no stable normal direction exists.
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),

    /// Yaw correlation had no discriminative peak (all-zero or constant maps).
    #[error("degenerate yaw score: {0}")]
    DegenerateScore(String),

    /// Alignment problem was rank-deficient (collinear or coincident supports).
    #[error("degenerate alignment: {0}")]
    DegenerateAlignment(String),

    /// Every candidate patch at a scale was skipped.
    #[error("no usable descriptors: {0}")]
    EmptyDescriptors(String),

    #[error("no hypothesis to score")]
    NoHypothesis,

    #[error("insufficient correspondences: have {have}, need {need}")]
    InsufficientCorrespondences { have: usize, need: usize },

    /// Compatibility graph peeled down to fewer than three mutually consistent pairs.
    #[error("insufficient structure: {0}")]
    InsufficientStructure(String),

    /// A pipeline stage failed; `stage` names it for diagnostics and exit codes.
    #[error("registration failed at stage `{stage}`: {source}")]
    Registration {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("benchmark error: {0}")]
    Benchmark(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Registration {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage name for registration failures, if this error carries one.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Registration { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
