use std::path::Path;

/// Failure of a command, mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, flags or model directory. Exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// A scene could not be generated. Exit code 3.
    #[error("scene generation failed: {0}")]
    Placement(String),
    /// Unreadable or corrupt input and output files. Exit code 4.
    #[error("data error: {0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Placement(_) => 3,
            CliError::Data(_) => 4,
        }
    }

    pub(crate) fn data(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
