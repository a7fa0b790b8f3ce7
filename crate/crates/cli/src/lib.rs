//! Config-driven runner for the `qpm-core` experiments.

pub mod config;
mod output;
pub mod presets;
mod run;

pub use config::ExperimentConfig;
pub use run::{run, Manifest, RunOptions};

use std::fmt;

/// Exit status of the `qpm` binary for each failure class.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration. Exit code 2.
    Validation(Vec<String>),
    /// A simulation step failed numerically. Exit code 3.
    Numerical(String),
    /// Filesystem trouble. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(errs) => {
                write!(
                    f,
                    "invalid configuration ({} problem{}):",
                    errs.len(),
                    if errs.len() == 1 { "" } else { "s" }
                )?;
                for e in errs {
                    write!(f, "\n  - {e}")?;
                }
                Ok(())
            }
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qpm_core::Error> for CliError {
    fn from(e: qpm_core::Error) -> Self {
        match e {
            qpm_core::Error::InvalidInput(m) => CliError::Validation(vec![m]),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
