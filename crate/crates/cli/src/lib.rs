//! Command-line front end for `gradnet`: configuration loading, the five
//! subcommands and their file outputs.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

/// Failure of a subcommand, mapped one-to-one onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model validation failed:\n{0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("simulation diverged; last finite state at t = {0}")]
    Divergence(f64),
    #[error("insufficient data: {0}")]
    Insufficient(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Model(_) => 2,
            CliError::Io(_) => 3,
            CliError::Divergence(_) => 4,
            CliError::Insufficient(_) => 5,
            CliError::CheckFailed(_) => 6,
        }
    }
}

impl From<gradnet::Error> for CliError {
    fn from(e: gradnet::Error) -> Self {
        use gradnet::Error as E;
        match e {
            E::Divergence { last_finite_time } => CliError::Divergence(last_finite_time),
            E::InsufficientData { .. } => CliError::Insufficient(e.to_string()),
            E::Validation(_) | E::Consistency(_) | E::NoDynamics | E::ImaginaryFrequency { .. } => {
                CliError::Model(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
