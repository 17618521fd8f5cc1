use alloc::string::String;

/// Failure modes shared by every module.
///
/// `Usage` covers invalid inputs (the CLI maps it to exit code 1),
/// `Resource` covers guards against runaway work (exit code 2).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Usage { field: &'static str, reason: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn usage(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Usage {
            field,
            reason: reason.into(),
        }
    }
}
