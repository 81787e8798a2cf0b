use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    /// `row` is the 1-based line number in the file, `column` is 1-based.
    #[error("{path}: line {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: column {column} ('{name}'): {source}")]
    Column {
        path: PathBuf,
        column: usize,
        name: String,
        source: warpca_core::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] warpca_core::Error),
}

impl CliError {
    /// 1 for invalid input, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) | CliError::Column { source: e, .. } if !e.is_validation() => 2,
            _ => 1,
        }
    }
}
