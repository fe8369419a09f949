//! Errors of the batch front end and their process exit codes.

use std::fmt;
use std::path::Path;

/// Broad failure class; decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid configuration or command line (exit code 1).
    Config,
    /// Unreadable, malformed or degenerate input data (exit code 2).
    Data,
    /// A numerical routine failed (exit code 3).
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub kind: ErrorKind,
    /// Pipeline stage in which the error happened, if any.
    pub stage: Option<String>,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            ErrorKind::Config => "configuration error",
            ErrorKind::Data => "data error",
            ErrorKind::Numerical => "numerical failure",
        };
        match &self.stage {
            Some(stage) => write!(f, "{label} in stage `{stage}`: {}", self.message),
            None => write!(f, "{label}: {}", self.message),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            stage: None,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Data,
            stage: None,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self::data(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        self.kind.exit_code()
    }

    /// Attaches a stage name unless one is already set.
    pub fn in_stage(mut self, stage: &str) -> Self {
        if self.stage.is_none() {
            self.stage = Some(stage.to_string());
        }
        self
    }

    pub fn context(mut self, what: impl fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<marketstates_core::Error> for CliError {
    fn from(err: marketstates_core::Error) -> Self {
        Self {
            kind: if err.is_numerical() {
                ErrorKind::Numerical
            } else {
                ErrorKind::Data
            },
            stage: None,
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        Self::data(err.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::config("x").exit_code(), 1);
        assert_eq!(CliError::data("x").exit_code(), 2);
        let e: CliError = marketstates_core::Error::SvdNonConvergence.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = marketstates_core::Error::EmptyPrices.into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn stage_is_named() {
        let e = CliError::data("bad row").in_stage("ingest").in_stage("run");
        assert_eq!(e.to_string(), "data error in stage `ingest`: bad row");
    }
}
