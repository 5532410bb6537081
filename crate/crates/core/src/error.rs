use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
///
/// Degenerate rows inside a recursion are *not* errors: they are replaced by a
/// uniform row and flagged on the returned [`ConditionalDistribution`]
/// (see `ConditionalDistribution::flagged`).
///
/// [`ConditionalDistribution`]: crate::game::ConditionalDistribution
#[derive(Debug, Error)]
pub enum Error {
    #[error("meaning function is identically zero")]
    AllZeroMeaningFunction,

    #[error("distortion matrix has negative entry {value} at ({row}, {col})")]
    NegativeDistortion { row: usize, col: usize, value: f64 },

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("context of {requested} meanings exceeds universe of {available} chips")]
    ContextTooLarge { requested: usize, available: usize },

    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("unknown language id {0}")]
    UnknownLanguage(u32),

    #[error("no major terms survive the mode-category filter for language {0}")]
    NoMajorTerms(u32),

    #[error("not a joint distribution: {0}")]
    NotAJoint(String),

    #[error("complexity {value:.6} outside frontier domain [{min:.6}, {max:.6}]")]
    OutsideRange { value: f64, min: f64, max: f64 },

    #[error("beta schedule is empty")]
    ScheduleEmpty,

    #[error("non-finite gradient encountered")]
    NonFiniteGradient,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
