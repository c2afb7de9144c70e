use std::path::PathBuf;

use crate::tasks::{TaskId, VariantKind};

/// Errors produced by the benchmark library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid action index {0} (expected 0..=17)")]
    InvalidAction(i64),

    #[error("variant {variant} is not available for task {task}")]
    UnsupportedVariant { task: TaskId, variant: VariantKind },

    #[error("malformed state: {0}")]
    MalformedState(String),

    #[error("episode incomplete: {steps} of {horizon} steps taken")]
    IncompleteEpisode { steps: usize, horizon: usize },

    #[error("episode already finished")]
    EpisodeFinished,

    #[error("environment has not been reset")]
    NotReset,

    #[error("expected {expected} actions, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unsupported trajectory format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt trajectory file: {0}")]
    CorruptFile(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("duplicate cell ({task}, {variant})")]
    DuplicateCell { task: TaskId, variant: VariantKind },

    #[error("invalid demo layout {name}: {reason}")]
    InvalidLayout { name: String, reason: String },

    #[error("rejection sampling exhausted after {0} attempts")]
    SamplingExhausted(usize),

    #[error("policy error: {0}")]
    Policy(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error on {path}: {source}")]
    PathIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
