use std::fmt;

use qualgate_core::Error;
use serde::Serialize;

/// Exit 1: bad arguments, config or missing inputs. Exit 2: the data
/// itself could not be processed.
#[derive(Debug)]
pub enum CliError {
    Validation { kind: &'static str, message: String },
    Data(Error),
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation {
            kind: "ValidationError",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation { kind, .. } => kind,
            CliError::Data(e) => e.kind(),
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Report {
            error: self.kind(),
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("plain struct serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation { message, .. } => f.write_str(message),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam(_) | Error::UnknownMethod(_) | Error::ModelUnavailable(_) => {
                CliError::Validation {
                    kind: e.kind(),
                    message: e.to_string(),
                }
            }
            other => CliError::Data(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
