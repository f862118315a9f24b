use std::path::PathBuf;

use crate::data::ValidationReport;
use crate::io::FormatError;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: {detail}")]
    Dimension { context: &'static str, detail: String },

    #[error("invalid data: {0}")]
    Invalid(#[from] ValidationReport),

    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    #[error("contract violation in {context}: {detail}")]
    Contract { context: &'static str, detail: String },

    #[error("non-finite value after {block} update at iteration {iteration}")]
    NonFinite { block: &'static str, iteration: usize },

    #[error("singular Sylvester system: eigenvalue sum {sum:e} at ({row}, {col})")]
    SingularSylvester { row: usize, col: usize, sum: f64 },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("repetition {rep}: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dim(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            detail: detail.into(),
        }
    }

    /// Short machine-readable code used by the command-line driver.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension { .. } | Error::Contract { .. } => "E_CONTRACT",
            Error::Invalid(_) => "E_DATA_INVALID",
            Error::Parameter { .. } | Error::Config(_) => "E_CONFIG",
            Error::NonFinite { .. } | Error::SingularSylvester { .. } => "E_NUMERICAL",
            Error::Format(_) => "E_DATA_FORMAT",
            Error::Io { .. } => "E_IO",
            Error::Repetition { source, .. } => source.code(),
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter { .. } | Error::Config(_) => 2,
            Error::Invalid(_) | Error::Format(_) | Error::Io { .. } => 3,
            Error::Dimension { .. } | Error::Contract { .. } => 3,
            Error::NonFinite { .. } | Error::SingularSylvester { .. } => 4,
            Error::Repetition { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
