//! Subcommand implementations. Each returns the process exit code on completion.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use sveis_core::analysis::{extinction_verdict_from_paths, path_extinction, PathExtinction};
use sveis_core::engine::ensemble_map;
use sveis_core::{
    dfe, persistence_verdict, simulate_ensemble, thresholds, Error, Histogram, ThresholdReportF64,
};

use crate::config::{ConfigFile, RunConfig};
use crate::error::{CliError, EXIT_OK, EXIT_RUNTIME, EXIT_VERDICT_FAILED};
use crate::output::{
    histogram_csv, to_json, trajectory_csv, ArtifactWriter, PathFailure, RunManifest, MANIFEST_FILE,
};

/// Bins of the per-path slope histogram written by `extinction`.
pub const SLOPE_BINS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Thresholds,
    Simulate,
    Persistence,
    Extinction,
    Dfe,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Thresholds => "thresholds",
            Command::Simulate => "simulate",
            Command::Persistence => "persistence",
            Command::Extinction => "extinction",
            Command::Dfe => "dfe",
        }
    }
}

/// Inputs shared by all subcommands.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

pub fn run(inv: &Invocation, stdout: &mut dyn Write) -> Result<u8, CliError> {
    let file = ConfigFile::load(&inv.config)?;
    match inv.command {
        Command::Thresholds => {
            let report = thresholds(&file.params)?;
            print(stdout, &to_json(&report))?;
            Ok(EXIT_OK)
        }
        Command::Dfe => {
            print(stdout, &to_json(&dfe(&file.params)))?;
            Ok(EXIT_OK)
        }
        Command::Simulate | Command::Persistence | Command::Extinction => {
            // Everything that can be rejected is checked before the output directory is touched.
            let run = file.resolve(inv.seed)?;
            let report = thresholds(&file.params)?;
            let started = Instant::now();
            let mut session = Session {
                writer: ArtifactWriter::create(&inv.out)?,
                command: inv.command,
                file: file.resolved_file(&run),
                report,
                failures: Vec::new(),
            };
            let code = match inv.command {
                Command::Simulate => simulate(&run, &mut session)?,
                Command::Persistence => persistence(&run, &file, &mut session)?,
                _ => extinction(&run, &file, &mut session)?,
            };
            session.finish(started)?;
            Ok(code)
        }
    }
}

fn print(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

struct Session {
    writer: ArtifactWriter,
    command: Command,
    file: ConfigFile,
    report: ThresholdReportF64,
    failures: Vec<PathFailure>,
}

impl Session {
    fn record_failure(&mut self, path_index: usize, error: &Error) {
        self.failures.push(PathFailure {
            path_index,
            error: error.to_string(),
        });
    }

    /// Records ensemble path failures; any other error aborts the command.
    fn absorb(&mut self, err: Error) -> Result<u8, CliError> {
        match err {
            Error::PathFailures(list) => {
                for (idx, e) in &list {
                    self.record_failure(*idx, e);
                }
                Ok(EXIT_RUNTIME)
            }
            other => Err(CliError::Simulation(other)),
        }
    }

    fn finish(mut self, started: Instant) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: self.command.name().into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: self.file,
            thresholds: self.report,
            artifacts: self.writer.artifacts(),
            failures: self.failures,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        self.writer.write(MANIFEST_FILE, &to_json(&manifest))
    }
}

#[derive(Serialize)]
struct VerdictReport<'a, V> {
    command: &'static str,
    thresholds: &'a ThresholdReportF64,
    verdict: &'a V,
}

fn simulate(run: &RunConfig, session: &mut Session) -> Result<u8, CliError> {
    let mut cfg = run.sim.clone();
    cfg.n_paths = run.paths_written;
    let rendered = ensemble_map(&cfg, |_, traj| trajectory_csv(&traj));
    let width = digits(run.paths_written);
    for (idx, result) in rendered.into_iter().enumerate() {
        match result {
            Ok(csv) => session.writer.write(&format!("path_{idx:0width$}.csv"), &csv?)?,
            Err(e) => session.record_failure(idx, &e),
        }
    }
    Ok(if session.failures.is_empty() { EXIT_OK } else { EXIT_RUNTIME })
}

fn persistence(run: &RunConfig, file: &ConfigFile, session: &mut Session) -> Result<u8, CliError> {
    let ens = match simulate_ensemble(&run.sim) {
        Ok(ens) => ens,
        Err(e) => return session.absorb(e),
    };
    let verdict = persistence_verdict(&ens, &run.sim.params, &file.experiment.persistence)
        .map_err(CliError::Simulation)?;
    drop(ens);
    session.writer.write("persistence.json", &to_json(&VerdictReport {
        command: "persistence",
        thresholds: &session.report,
        verdict: &verdict,
    }))?;
    session.writer.write("histogram_I.csv", &histogram_csv(Some(&verdict.pooled)))?;
    Ok(if verdict.passed { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

fn extinction(run: &RunConfig, file: &ConfigFile, session: &mut Session) -> Result<u8, CliError> {
    let p = run.sim.params;
    let opts = file.experiment.extinction;
    // Paths are reduced to their fit as soon as they finish, so memory stays flat in n_paths.
    let results = ensemble_map(&run.sim, |_, traj| path_extinction(&traj, &p, opts.fit_fraction));
    let mut paths: Vec<PathExtinction> = Vec::with_capacity(results.len());
    for (idx, result) in results.into_iter().enumerate() {
        match result {
            Ok(fit) => paths.push(fit.map_err(CliError::Simulation)?),
            Err(e) => session.record_failure(idx, &e),
        }
    }
    if !session.failures.is_empty() {
        return Ok(EXIT_RUNTIME);
    }
    let verdict = extinction_verdict_from_paths(paths, &p, &opts).map_err(CliError::Simulation)?;
    let slopes: Vec<f64> = verdict.paths.iter().filter_map(PathExtinction::slope).collect();
    let hist = Histogram::edges_for(&slopes, SLOPE_BINS)
        .and_then(|edges| Histogram::from_samples(&slopes, edges, 0.0))
        .ok();
    session.writer.write("extinction.json", &to_json(&VerdictReport {
        command: "extinction",
        thresholds: &session.report,
        verdict: &verdict,
    }))?;
    session.writer.write("histogram_slope.csv", &histogram_csv(hist.as_ref()))?;
    Ok(if verdict.passed { EXIT_OK } else { EXIT_VERDICT_FAILED })
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}
