use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sveis_cli::error::{CliError, EXIT_CONFIG};
use sveis_cli::{Command, Invocation};

#[derive(Parser)]
#[command(name = "sveis", version, about = "Stochastic SVEIS model: thresholds, simulation and regime checks")]
struct Cli {
    /// JSON config with `params`, `sim` and `experiment` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV, JSON and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides `sim.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Outputs do not depend on it.
    #[arg(long, global = true, env = "SVEIS_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Print R0, R0ˢ, R0ᵉ, the DFE and the predicted regime as JSON.
    Thresholds,
    /// Write trajectory CSVs and a manifest.
    Simulate,
    /// Run an ensemble and check stationarity and persistence of I.
    Persistence,
    /// Run an ensemble and check the exponential decay rate of E and I.
    Extinction,
    /// Print the disease-free equilibrium as JSON.
    Dfe,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Sub::Thresholds => Command::Thresholds,
        Sub::Simulate => Command::Simulate,
        Sub::Persistence => Command::Persistence,
        Sub::Extinction => Command::Extinction,
        Sub::Dfe => Command::Dfe,
    };
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(EXIT_CONFIG);
    };
    let inv = Invocation { command, config, out: cli.out, seed: cli.seed };
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))
        .and_then(|pool| pool.install(|| sveis_cli::run(&inv, &mut std::io::stdout().lock())));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
