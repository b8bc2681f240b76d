use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a completed run whose verdict passed.
pub const EXIT_OK: u8 = 0;
/// Exit code for a completed run whose verdict failed.
pub const EXIT_VERDICT_FAILED: u8 = 1;
/// Exit code for configuration errors; nothing is written.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for simulation or I/O failures.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead { path: PathBuf, source: std::io::Error },

    #[error("invalid config: {0}")]
    Model(#[from] sveis_core::Error),

    #[error("simulation failed: {0}")]
    Simulation(sveis_core::Error),

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::ConfigRead { .. } | CliError::Model(_) => EXIT_CONFIG,
            CliError::Simulation(_) | CliError::Io { .. } | CliError::Pool(_) => EXIT_RUNTIME,
        }
    }
}
