//! JSON run configuration: `params`, `sim` and `experiment` sections with strict keys.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sveis_core::{
    default_dt, dfe, ExtinctionOptions, ModelParamsF64, PersistenceOptions, Scheme, SimConfigF64, StateF64, TimeGrid,
    ZHold,
};

use crate::error::CliError;

/// Default number of paths for ensemble commands.
pub const DEFAULT_N_PATHS: usize = 1000;
/// Upper bound on stored nodes per path when `record_stride` is omitted.
pub const DEFAULT_MAX_NODES: usize = 10_000;
/// Trajectory CSVs written by `simulate` when `paths_written` is omitted.
pub const DEFAULT_PATHS_WRITTEN: usize = 10;
/// Fraction of `S⁰` moved into `I` for the default initial state.
pub const DEFAULT_SEED_FRACTION: f64 = 0.01;

/// On-disk schema. Every optional field is filled by [`ConfigFile::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub params: ModelParamsF64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default)]
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<StateF64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_hold: Option<ZHold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Number of trajectory CSVs written by `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths_written: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub persistence: PersistenceOptions,
    pub extinction: ExtinctionOptions,
}

/// Fully resolved simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sim: SimConfigF64,
    pub paths_written: usize,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        file.params.validate()?;
        file.check_experiment()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    fn check_experiment(&self) -> Result<(), CliError> {
        let (p, e) = (&self.experiment.persistence, &self.experiment.extinction);
        let fraction = |x: f64| x > 0.0 && x <= 1.0;
        let checks = [
            (p.tv_threshold > 0.0 && p.tv_threshold <= 1.0, "experiment.persistence.tv_threshold", "must lie in (0, 1]"),
            (p.persist_epsilon_factor > 0.0 && p.persist_epsilon_factor.is_finite(), "experiment.persistence.persist_epsilon_factor", "must be positive"),
            (fraction(p.pass_fraction), "experiment.persistence.pass_fraction", "must lie in (0, 1]"),
            (p.bins >= 1, "experiment.persistence.bins", "must be at least 1"),
            (fraction(e.fit_fraction), "experiment.extinction.fit_fraction", "must lie in (0, 1]"),
            (fraction(e.pass_fraction), "experiment.extinction.pass_fraction", "must lie in (0, 1]"),
        ];
        match checks.iter().find(|(ok, _, _)| !ok) {
            Some((_, path, message)) => Err(CliError::Schema {
                path: (*path).into(),
                message: (*message).into(),
            }),
            None => Ok(()),
        }
    }

    /// Applies defaults and validates the simulation section. `seed` overrides the file.
    pub fn resolve(&self, seed: Option<u64>) -> Result<RunConfig, CliError> {
        let sim = self.sim.as_ref().ok_or_else(|| CliError::Schema {
            path: "sim".into(),
            message: "missing section (required by simulation commands)".into(),
        })?;
        let p = self.params;
        let dt = sim.dt.unwrap_or_else(|| default_dt(&p));
        let grid = TimeGrid::new(sim.horizon, dt)?;
        let n_paths = sim.n_paths.unwrap_or(DEFAULT_N_PATHS);
        let cfg = SimConfigF64 {
            params: p,
            init: sim.init.unwrap_or_else(|| default_init(&p)),
            horizon: sim.horizon,
            dt,
            n_paths,
            master_seed: seed.or(sim.seed).unwrap_or(0),
            record_stride: sim.record_stride.unwrap_or_else(|| grid.stride_for(DEFAULT_MAX_NODES)),
            z_hold: sim.z_hold.unwrap_or_default(),
            scheme: sim.scheme.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(RunConfig {
            sim: cfg,
            paths_written: sim.paths_written.unwrap_or(DEFAULT_PATHS_WRITTEN).min(n_paths),
        })
    }

    /// The same file with every default written out, as recorded in the manifest.
    pub fn resolved_file(&self, run: &RunConfig) -> ConfigFile {
        let c = &run.sim;
        ConfigFile {
            params: c.params,
            sim: Some(SimSection {
                horizon: c.horizon,
                dt: Some(c.dt),
                n_paths: Some(c.n_paths),
                seed: Some(c.master_seed),
                record_stride: Some(c.record_stride),
                init: Some(c.init),
                z_hold: Some(c.z_hold),
                scheme: Some(c.scheme),
                paths_written: Some(run.paths_written),
            }),
            experiment: self.experiment,
        }
    }
}

/// Disease-free equilibrium with a small fraction of `S⁰` moved into `I`.
pub fn default_init(p: &ModelParamsF64) -> StateF64 {
    let d = dfe(p);
    let seeded = DEFAULT_SEED_FRACTION * d.s;
    StateF64::new(d.s - seeded, d.v, 0.0, seeded, 0.0)
}
