use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at index {index} in {context}")]
    NonFinite { context: &'static str, index: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density is infinite: theta_{index} is on the simplex boundary with alpha_{index} < 1")]
    InfiniteDensity { index: usize },

    #[error("rectification undefined: noise rate {delta} >= {limit} for {actions} actions")]
    RectificationUndefined {
        delta: f64,
        limit: f64,
        actions: usize,
    },

    #[error("degenerate evidence: observation has zero likelihood under every model of agent {agent}")]
    DegenerateEvidence { agent: usize },

    #[error("action {action} is not available to a {role}")]
    RoleMismatch { action: String, role: &'static str },

    #[error("expected one action per live agent ({expected}), got {actual}")]
    ActionCount { expected: usize, actual: usize },

    #[error("config error at line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("incompatible snapshot: {0}")]
    IncompatibleSnapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_finite(context: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { context, index }),
        None => Ok(()),
    }
}
