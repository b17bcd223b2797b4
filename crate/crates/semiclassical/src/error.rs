use std::fmt;

use semiclassical_core::Error as CoreError;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug)]
pub enum RunError {
    /// Bad configuration or arguments; exit code 2.
    Validation { field: String, reason: String },
    /// A numeric stage failed; exit code 3.
    Numeric { stage: &'static str, source: CoreError },
    /// A stage completed but its checks did not pass; exit code 3.
    Check { stage: &'static str, detail: String },
    /// Writing results failed; exit code 3.
    Io { stage: &'static str, source: std::io::Error },
}

impl RunError {
    pub fn validation(field: &str, reason: &str) -> Self {
        RunError::Validation {
            field: field.to_owned(),
            reason: reason.to_owned(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation { .. } => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Validation { field, reason } => write!(f, "cli::validate: invalid `{field}`: {reason}"),
            RunError::Numeric { stage, source } => write!(f, "numeric failure in stage `{stage}`: {source}"),
            RunError::Check { stage, detail } => write!(f, "checks failed in stage `{stage}`: {detail}"),
            RunError::Io { stage, source } => write!(f, "cli::{stage}: {source}"),
        }
    }
}

impl std::error::Error for RunError {}

/// Attaches a stage name to core errors.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for Result<T, CoreError> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numeric { stage, source })
    }
}
