use std::fmt;

use cpf_core::CpfError;

/// Failures mapped onto process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Config rejected; exit 2.
    Config { field: String, message: String },
    /// Model failed at evaluation time; exit 3.
    Model(CpfError),
    /// Filesystem or serialization failure; exit 1.
    Io(String),
    /// A comparison or self-test did not pass; exit 4.
    CheckFailed(String),
}

impl CliError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        let field = if field.is_empty() || field == "." {
            "<root>".to_string()
        } else {
            field.to_string()
        };
        CliError::Config {
            field,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config { .. } => 2,
            CliError::Model(_) => 3,
            CliError::CheckFailed(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { field, message } => {
                write!(f, "config error at `{field}`: {message}")
            }
            CliError::Model(e) => write!(f, "model error: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CpfError> for CliError {
    fn from(e: CpfError) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
