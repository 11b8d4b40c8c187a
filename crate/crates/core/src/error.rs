//! Error type shared by the whole pipeline.
//!
//! Variant names are part of the CLI contract: commands print the variant
//! name on stderr and exit with code 1, so scripts can match on them.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("MalformedRecord: line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("NonMonotonicTimestamp: line {line}: {t} ms does not increase over {prev} ms")]
    NonMonotonicTimestamp { line: usize, t: u64, prev: u64 },

    #[error("WrongJointCount: line {line}: expected {expected} joints, got {got}")]
    WrongJointCount {
        line: usize,
        expected: usize,
        got: usize,
    },

    #[error("EmptySession: session has no frames")]
    EmptySession,

    #[error("InsufficientTracking: {joint} tracked in {ratio:.1}% of frames, need >= {required:.1}%")]
    InsufficientTracking {
        joint: &'static str,
        ratio: f64,
        required: f64,
    },

    #[error("DegenerateRange: hip depth range {range_m:.3} m < {min_m:.3} m, subject never left the chair region")]
    DegenerateRange { range_m: f64, min_m: f64 },

    #[error("NoSteps: fewer than 2 step crossings in every walking interval, average step duration undefined")]
    NoSteps,

    #[error("ZeroVector: cannot measure an angle against a zero-length vector")]
    ZeroVector,

    #[error("TooFewPoints: k-means needs at least {k} points, got {n}")]
    TooFewPoints { k: usize, n: usize },

    #[error("TooFewDistinctPoints: k-means needs at least {k} distinct points, got {distinct}")]
    TooFewDistinctPoints { k: usize, distinct: usize },

    #[error("EmptyStream: cannot build a histogram from an empty feature stream")]
    EmptyStream,

    #[error("DimensionMismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("EmptyTrainingSet: no training vectors")]
    EmptyTrainingSet,

    #[error("SingleClassTraining: training set contains only one class")]
    SingleClassTraining,

    #[error("TooFewSubjects: leave-one-subject-out needs >= 2 subjects, got {got}")]
    TooFewSubjects { got: usize },

    #[error("UnlabeledSession: {subject}/{trial} has no risk label")]
    UnlabeledSession { subject: String, trial: String },

    #[error("InvalidParams: {0}")]
    InvalidParams(String),

    #[error("InvalidProfile: {0}")]
    InvalidProfile(String),

    #[error("FoldFailure: fold {subject}: {source}")]
    FoldFailure {
        subject: String,
        #[source]
        source: Box<Error>,
    },

    #[error("Io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
