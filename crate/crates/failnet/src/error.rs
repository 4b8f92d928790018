use std::path::PathBuf;

use failnet_core::Error as CoreError;

/// Failure of a command, grouped by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("network failed validation: {0}")]
    Validation(String),
    #[error("malformed input {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const VALIDATION: i32 = 3;
    pub const MALFORMED: i32 = 4;
    pub const INVALID_MODEL: i32 = 5;
    pub const CERTIFICATION: i32 = 6;
    pub const RESOURCE_CAP: i32 = 7;
    pub const NUMERICAL: i32 = 8;
    pub const IO: i32 = 10;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Malformed { .. } => exit::MALFORMED,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                CoreError::NotFairSampling { .. }
                | CoreError::DegenerateParty { .. }
                | CoreError::SourceBlocked { .. }
                | CoreError::ZeroSuccess => exit::CERTIFICATION,
                CoreError::DimensionCap { .. } | CoreError::EnumerationCap { .. } | CoreError::TooManySources { .. } => {
                    exit::RESOURCE_CAP
                }
                CoreError::NotPsd { .. } | CoreError::InvalidRegime(_) => exit::NUMERICAL,
                _ => exit::INVALID_MODEL,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}
