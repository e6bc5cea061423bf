//! CLI error taxonomy mapped onto process exit codes:
//! 0 ok, 2 validation, 3 undefined quantity, 4 I/O.

use thiserror::Error;
use weaktrace::analysis::AnalysisError;
use weaktrace::circuit::CircuitError;
use weaktrace::meters::MeterError;
use weaktrace::tsvf::TsvfError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Undefined(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Undefined(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn io(context: &str, err: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TsvfError> for CliError {
    fn from(e: TsvfError) -> Self {
        match e {
            TsvfError::UndefinedWeakValue { .. } => CliError::Undefined(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MeterError> for CliError {
    fn from(e: MeterError) -> Self {
        match e {
            MeterError::PostSelectionUnderflow => CliError::Undefined(e.to_string()),
            MeterError::Tsvf(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Meter(inner) => inner.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(format!("serializing output: {e}"))
    }
}
