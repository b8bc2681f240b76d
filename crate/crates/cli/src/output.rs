//! CSV and JSON writers. Numbers are formatted deterministically so that reruns with the same
//! config produce identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sveis_core::trajectory::SeriesContext;
use sveis_core::{Component, Histogram, ThresholdReportF64, TrajectoryF64};

use crate::config::ConfigFile;
use crate::error::CliError;

pub const TRAJECTORY_HEADER: &str = "t,S,V,E,I,z,beta,N,Ve";
pub const HISTOGRAM_HEADER: &str = "bin_left,bin_right,mass";

/// Scientific notation with 17 significant digits; enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(traj: &TrajectoryF64) -> Result<String, CliError> {
    let ctx = SeriesContext::new(&traj.meta.params);
    let mut out = String::with_capacity(200 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let beta = ctx.value(s, Component::Beta)?;
        let ve = ctx.value(s, Component::Ve)?;
        let row = [*t, s.s, s.v, s.e, s.i, s.z, beta, s.total(), ve];
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn histogram_csv(h: Option<&Histogram>) -> String {
    let mut out = format!("{HISTOGRAM_HEADER}\n");
    if let Some(h) = h {
        for (w, mass) in h.edges.windows(2).zip(&h.masses) {
            let _ = writeln!(out, "{},{},{}", fmt_f64(w[0]), fmt_f64(w[1]), fmt_f64(*mass));
        }
    }
    out
}

/// Pretty JSON with a trailing newline. `serde_json` prints the shortest decimal that
/// round-trips each `f64`, so values are lossless and byte-stable.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Effective configuration with every default filled in; valid input for `--config`.
    pub config: ConfigFile,
    pub thresholds: ThresholdReportF64,
    /// Output files, relative to the output directory.
    pub artifacts: Vec<String>,
    pub failures: Vec<PathFailure>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Sequential writer rooted at the output directory that remembers what it wrote.
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn artifacts(&self) -> Vec<String> {
        self.written.clone()
    }
}
