use thiserror::Error;

/// Failures that stop a command. Verification failures are not errors;
/// they are reported with exit code 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Precondition(_) => 3,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub(crate) trait Classify<T> {
    /// Library errors caused by bad inputs.
    fn config(self) -> Result<T>;
    /// Library errors raised while computing.
    fn precondition(self) -> Result<T>;
}

impl<T> Classify<T> for powerdiv_core::Result<T> {
    fn config(self) -> Result<T> {
        self.map_err(|e| CliError::Config(e.to_string()))
    }

    fn precondition(self) -> Result<T> {
        self.map_err(|e| CliError::Precondition(e.to_string()))
    }
}
