//! Config ingestion, presets and CSV output for the command-line tool.

pub mod commands;
pub mod config;
pub mod csv;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{execute, run, RunOutput, Subcommand};
pub use config::{AxisSpec, ConfigError, Preset, RunConfig, Scale, SchemeKind};
pub use csv::{config_from_output, Cell, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }
}
