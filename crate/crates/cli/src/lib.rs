//! Command-line front end for the stochastic SVEIS model: JSON configs in, CSV and JSON out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, Invocation};
pub use config::{ConfigFile, RunConfig};
pub use error::CliError;
pub use output::RunManifest;
