//! Front-end of the solver: configuration, orchestration of the runs, field
//! and report output, and the certificate table.

pub mod config;
pub mod render;
pub mod report;
pub mod run;

use std::path::PathBuf;

use kgm_core::KgmError;
use thiserror::Error;

pub use config::{Mode, Overrides, RunConfig};
pub use render::render;
pub use report::{CertificateRow, Report, Status};
pub use run::run;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const CONFIG_ERROR: u8 = 2;
    pub const SOLVER_FAILED: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Solver(#[from] KgmError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("history output: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed report: {0}")]
    Report(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Report(_) => exit::CONFIG_ERROR,
            CliError::Solver(_) | CliError::Io { .. } | CliError::Csv(_) => exit::SOLVER_FAILED,
        }
    }
}
