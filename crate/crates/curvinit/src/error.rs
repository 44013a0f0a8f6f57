use std::io;
use std::path::PathBuf;

use curvinit_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("config line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("data: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("numeric: {0}")]
    Numeric(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigLine { .. } => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
            CliError::Core(e) => match e {
                CoreError::InvalidParameter(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::IndexOutOfRange { .. }
                | CoreError::TargetMismatch(_) => 2,
                CoreError::InvalidClass { .. } | CoreError::EmptyDataset | CoreError::DegenerateSequence => 3,
                CoreError::NonFinite(_)
                | CoreError::BracketNotFound { .. }
                | CoreError::NotConverged { .. }
                | CoreError::Divergence { .. } => 4,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
