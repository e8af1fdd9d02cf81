//! Experiment harness around `eol-core`: configuration files, the numbered
//! parameter settings of the numerical study, comparison grids, sweeps and
//! report files.

pub mod config;
pub mod experiment;
pub mod report;
pub mod settings;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Model(#[from] eol_core::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
