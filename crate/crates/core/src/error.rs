use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes disagree.
    #[error("shape error in {context}: {detail}")]
    Shape { context: String, detail: String },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A data file did not match its declared format.
    #[error("parse error at byte {offset}: {detail}")]
    Parse { offset: usize, detail: String },

    /// Training produced a non-finite or runaway loss.
    #[error("training diverged at epoch {epoch} ({component}): loss = {loss}")]
    Diverged { epoch: usize, component: String, loss: f64 },

    /// Experiment configuration failed validation.
    #[error("config error at `{path}`: {detail}")]
    Config { path: String, detail: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// A stored artifact does not match the hash recorded for it.
    #[error("integrity check failed for {path}: {detail}")]
    Integrity { path: PathBuf, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status for the command-line tool: 2 for invalid input,
    /// 3 for divergence, 4 for I/O, parse and integrity failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Contract(_) | Error::Shape { .. } => 2,
            Error::Diverged { .. } => 3,
            Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::Integrity { .. } => 4,
        }
    }

    pub(crate) fn shape(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Shape {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
