use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("report has no `{0}` series")]
    MissingSeries(String),

    #[error(transparent)]
    Core(#[from] hjj_core::Error),

    #[error("bad environment: {0}")]
    Environment(String),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl ToString) -> Self {
        CliError::Validation {
            field: field.into(),
            reason: reason.to_string(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit code: 3 for anything wrong with the inputs, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. }
            | CliError::Validation { .. }
            | CliError::Core(_)
            | CliError::Environment(_) => 3,
            CliError::Io { .. } | CliError::MissingSeries(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
