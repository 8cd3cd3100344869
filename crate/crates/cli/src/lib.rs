//! Scenario-driven front end: threshold, effective potential and classification,
//! certificates and the 2D eigenvalue search, written as JSON and CSV reports.

pub mod golden;
pub mod pipeline;
pub mod scenario;

use std::fmt;

pub use pipeline::{run_all, run_bound_states, run_potential, run_threshold, Context};
pub use scenario::Scenario;

#[derive(Debug)]
pub enum CliError {
    Scenario(String),
    Io(String),
    Core(waveguide_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Scenario(m) => write!(f, "scenario: {m}"),
            CliError::Io(m) => write!(f, "io: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<waveguide_core::Error> for CliError {
    fn from(e: waveguide_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Error = 1,
    /// The mathematics was inconclusive or a check raised a warning.
    Warnings = 2,
}
