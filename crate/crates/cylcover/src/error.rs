use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("verification failed: {0}")]
    Verification(String),
    /// `--help` / `--version` output; not a failure.
    #[error("{0}")]
    Help(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) => 1,
            CliError::Resource(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<cylcover_core::Error> for CliError {
    fn from(e: cylcover_core::Error) -> Self {
        match e {
            cylcover_core::Error::Usage { .. } => CliError::Usage(e.to_string()),
            cylcover_core::Error::Resource(_) => CliError::Resource(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Resource(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Resource(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Resource(format!("json: {e}"))
    }
}
