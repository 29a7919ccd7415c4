use resbench_core::Error as CoreError;
use thiserror::Error;

/// Failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, missing or unreadable files, invalid configuration: exit 2.
    #[error("{0}")]
    Config(String),
    /// Inputs that parse but fail validation: exit 3.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Io { .. }
            | CoreError::ZeroBudget
            | CoreError::InvalidArgument(_)
            | CoreError::InvalidWorld(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a file name to data errors raised while reading it.
pub trait Context<T> {
    fn in_file(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn in_file(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| match CliError::from(e) {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
