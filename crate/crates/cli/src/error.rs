use std::fmt;

use pnn_core::ErrorKind;

/// A failure tagged with the pipeline stage that produced it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        CliError {
            stage,
            kind: ErrorKind::Config,
            message: message.into(),
        }
    }

    pub fn data(stage: &'static str, message: impl Into<String>) -> Self {
        CliError {
            stage,
            kind: ErrorKind::Data,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numeric => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches a stage name to library errors.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> Stage<T> for pnn_core::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| CliError {
            stage,
            kind: e.kind(),
            message: e.to_string(),
        })
    }
}
