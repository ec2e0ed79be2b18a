//! Experiment runner behind the `summlab` binary.
//!
//! An experiment is a kind plus a flat configuration and a seed. Every run
//! writes its CSV files and a `manifest.txt` into the output directory, each
//! through a temporary file and a rename.

pub mod config;
pub mod output;
pub mod run;

use std::fmt;

pub use config::Config;
pub use run::{run, Outcome, KINDS};

/// Failures of a run, each with its process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Validation(String),
    Budget(String),
    Tolerance(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Tolerance(m) => write!(f, "tolerance check failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<summlab::Error> for CliError {
    fn from(e: summlab::Error) -> Self {
        use summlab::Error as E;
        match e {
            E::BudgetExceeded(_) => CliError::Budget(e.to_string()),
            E::Tolerance { .. } | E::NotStronglyNull(_) => CliError::Tolerance(e.to_string()),
            E::CorruptContainer(_) | E::UnsupportedVersion { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
