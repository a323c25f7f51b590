//! Command-line front end for the `interarea` library: scenario files,
//! analysis commands and their CSV / JSON / SVG output.

pub mod app;
pub mod commands;
pub mod emit;
pub mod scenario;

use interarea::modal::ModalError;
use interarea::netmodel::NetworkError;
use interarea::statespace::StateSpaceError;
use interarea::timesim::SimError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("malformed JSON: {0}")]
    Parse(String),
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Schema(Vec<String>),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Schema(_) | CliError::Validation(_) | CliError::Usage(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
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

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::SingularReduction => CliError::Numerical(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<StateSpaceError> for CliError {
    fn from(e: StateSpaceError) -> Self {
        match e {
            StateSpaceError::Network(n) => n.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ModalError> for CliError {
    fn from(e: ModalError) -> Self {
        match e {
            ModalError::InvalidThreshold(_) | ModalError::UnknownMode(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Modal(m) => m.into(),
            SimError::Network(n) => n.into(),
            SimError::StateSpace(s) => s.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}
