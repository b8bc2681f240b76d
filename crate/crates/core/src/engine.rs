//! Path and ensemble simulation of the stochastic system.
//!
//! The default scheme splits each step into an exact OU transition for `z` and an RK4 step for
//! the compartments with `z` held fixed over the step. A full-truncation Euler–Maruyama scheme is
//! available for cross-validation only.
//!
//! Path `i` of an ensemble is driven by `RngStream::new(master_seed, i)` and nothing else, so
//! ensembles are bit-identical under any thread count or scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{compartment_drift, ModelParams, State};
use crate::ode::rk4_step;
use crate::ou::OuTransition;
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::trajectory::{TimeGrid, Trajectory, TrajectoryMeta, WindowIntegrals};

/// Where `z` is evaluated for the compartment sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZHold {
    /// `z` at the start of the step.
    LeftPoint,
    /// OU conditional mean at the half step, `z·e^{−θ·dt/2}`.
    #[default]
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Splitting,
    /// Full-truncation Euler–Maruyama on all five coordinates.
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub params: ModelParams<T>,
    pub init: State<T>,
    pub horizon: T,
    pub dt: T,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Record every `record_stride`-th node (the last node is always recorded).
    pub record_stride: usize,
    pub z_hold: ZHold,
    pub scheme: Scheme,
}

/// Relative slack allowed on `N ≤ Π/m` and `S ≤ S⁰` when checking initial conditions.
const INIT_GAMMA_TOL: f64 = 1e-12;

impl<T: Scalar> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        TimeGrid::new(self.horizon, self.dt)?;
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        let init = &self.init;
        if !(init.s.is_finite() && init.v.is_finite() && init.e.is_finite() && init.i.is_finite())
            || !init.z.is_finite()
        {
            return Err(Error::InvalidConfig("initial state must be finite".into()));
        }
        if !init.in_gamma(&self.params, T::lit(INIT_GAMMA_TOL)) || init.min_compartment() < T::zero() {
            return Err(Error::InvalidConfig(
                "initial state must satisfy S, V, E, I ≥ 0, S + V + E + I ≤ Π/m and S ≤ S⁰".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid<T>> {
        TimeGrid::new(self.horizon, self.dt)
    }

    pub fn scheme_name(&self) -> &'static str {
        match (self.scheme, self.z_hold) {
            (Scheme::Splitting, ZHold::Midpoint) => "splitting-midpoint",
            (Scheme::Splitting, ZHold::LeftPoint) => "splitting-left-point",
            (Scheme::EulerMaruyama, _) => "euler-maruyama-full-truncation",
        }
    }
}

struct Recorder<T> {
    stride: usize,
    n_steps: usize,
    times: Vec<T>,
    states: Vec<State<T>>,
    windows: WindowIntegrals<T>,
}

impl<T: Scalar> Recorder<T> {
    fn new(grid: &TimeGrid<T>, stride: usize, init: State<T>) -> Self {
        let cap = grid.recorded_nodes(stride);
        let mut times = Vec::with_capacity(cap);
        let mut states = Vec::with_capacity(cap);
        times.push(T::zero());
        states.push(init);
        Self {
            stride,
            n_steps: grid.n_steps,
            times,
            states,
            windows: WindowIntegrals::new(grid.horizon),
        }
    }

    /// Registers node `k + 1` reached from node `k`.
    fn step(&mut self, k: usize, t0: T, prev: &State<T>, t1: T, next: &State<T>) {
        self.windows.accumulate(t0, prev, t1, next);
        let node = k + 1;
        if node.is_multiple_of(self.stride) || node == self.n_steps {
            self.times.push(t1);
            self.states.push(*next);
        }
    }
}

/// Simulates path `path_index` of the configured ensemble.
pub fn simulate_path<T: Scalar>(cfg: &SimConfig<T>, path_index: usize) -> Result<Trajectory<T>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let mut rng = RngStream::new(cfg.master_seed, path_index as u64);
    let recorder = match cfg.scheme {
        Scheme::Splitting => run_splitting(cfg, &grid, &mut rng)?,
        Scheme::EulerMaruyama => run_euler_maruyama(cfg, &grid, &mut rng),
    };
    Ok(Trajectory {
        times: recorder.times,
        states: recorder.states,
        meta: TrajectoryMeta {
            params: cfg.params,
            scheme: cfg.scheme_name().to_string(),
            dt: cfg.dt,
            seed: Some(cfg.master_seed),
            path_index: Some(path_index as u64),
        },
        windows: Some(recorder.windows),
    })
}

/// Compartment step with one retry as two half steps at the same held `z`.
fn compartment_step<T: Scalar>(s: &State<T>, h: T, p: &ModelParams<T>, z_hold: T) -> Result<State<T>> {
    match rk4_step(s, h, p, z_hold) {
        Err(Error::StepProducedNegative { .. }) => {
            let half = h / T::lit(2.0);
            let mid = rk4_step(s, half, p, z_hold)?;
            rk4_step(&mid, half, p, z_hold)
        }
        other => other,
    }
}

fn run_splitting<T: Scalar>(
    cfg: &SimConfig<T>,
    grid: &TimeGrid<T>,
    rng: &mut RngStream,
) -> Result<Recorder<T>> {
    let p = &cfg.params;
    let ou = p.ou();
    let full = OuTransition::new(&ou, grid.dt);
    let full_half_decay = (-p.theta * grid.dt / T::lit(2.0)).exp();
    let mut recorder = Recorder::new(grid, cfg.record_stride, cfg.init);
    let mut current = cfg.init;
    for k in 0..grid.n_steps {
        let h = grid.step(k);
        let (transition, half_decay) = if h == grid.dt {
            (full, full_half_decay)
        } else {
            (OuTransition::new(&ou, h), (-p.theta * h / T::lit(2.0)).exp())
        };
        let z_next = transition.sample(current.z, rng);
        let z_hold = match cfg.z_hold {
            ZHold::LeftPoint => current.z,
            ZHold::Midpoint => current.z * half_decay,
        };
        let mut next = compartment_step(&current, h, p, z_hold)?;
        next.z = z_next;
        recorder.step(k, grid.time(k), &current, grid.time(k + 1), &next);
        current = next;
    }
    Ok(recorder)
}

fn positive_part<T: Scalar>(s: &State<T>) -> State<T> {
    let z0 = T::zero();
    State::new(s.s.max(z0), s.v.max(z0), s.e.max(z0), s.i.max(z0), s.z)
}

fn run_euler_maruyama<T: Scalar>(cfg: &SimConfig<T>, grid: &TimeGrid<T>, rng: &mut RngStream) -> Recorder<T> {
    let p = &cfg.params;
    let mut recorder = Recorder::new(grid, cfg.record_stride, cfg.init);
    // The auxiliary process may go negative; coefficients and output use its positive part.
    let mut raw = cfg.init;
    let mut shown = positive_part(&raw);
    for k in 0..grid.n_steps {
        let h = grid.step(k);
        let normal = T::lit(rng.standard_normal());
        let d = compartment_drift(&shown, p, p.beta_bar * raw.z.exp());
        let z_next = raw.z - p.theta * raw.z * h + p.delta * h.sqrt() * normal;
        raw = raw + d * h;
        raw.z = z_next;
        let next = positive_part(&raw);
        recorder.step(k, grid.time(k), &shown, grid.time(k + 1), &next);
        shown = next;
    }
    recorder
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub trajectories: Vec<Trajectory<T>>,
    pub config: SimConfig<T>,
}

/// Simulates all `n_paths` paths, in parallel on the current rayon pool.
///
/// Failures from individual paths are gathered with their indices into [`Error::PathFailures`].
pub fn simulate_ensemble<T: Scalar>(cfg: &SimConfig<T>) -> Result<Ensemble<T>> {
    cfg.validate()?;
    let results = ensemble_map(cfg, |_, traj| traj);
    let mut trajectories = Vec::with_capacity(cfg.n_paths);
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => trajectories.push(t),
            Err(e) => failures.push((i, e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::PathFailures(failures));
    }
    Ok(Ensemble {
        trajectories,
        config: cfg.clone(),
    })
}

/// Simulates every path and reduces it with `f` without retaining the trajectory.
/// Results are in path order.
pub fn ensemble_map<T, R, F>(cfg: &SimConfig<T>, f: F) -> Vec<Result<R>>
where
    T: Scalar,
    R: Send,
    F: Fn(usize, Trajectory<T>) -> R + Sync,
{
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(cfg, i).map(|traj| f(i, traj)))
        .collect()
}

/// Margins of a trajectory against the invariant region `{N ≤ Π/m, S ≤ S⁰, compartments ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaReport<T> {
    /// `max(N − Π/m)` over recorded nodes.
    pub max_population_excess: T,
    /// `max(S − S⁰)` over recorded nodes.
    pub max_susceptible_excess: T,
    /// Most negative compartment value over recorded nodes.
    pub min_compartment: T,
    pub passed: bool,
}

/// Passes iff every margin is within `tol·Π/m`.
pub fn check_gamma<T: Scalar>(traj: &Trajectory<T>, p: &ModelParams<T>, tol: T) -> GammaReport<T> {
    let bound = p.population_bound();
    let s0 = p.s0();
    let mut report = GammaReport {
        max_population_excess: T::neg_infinity(),
        max_susceptible_excess: T::neg_infinity(),
        min_compartment: T::infinity(),
        passed: false,
    };
    for s in &traj.states {
        report.max_population_excess = report.max_population_excess.max(s.total() - bound);
        report.max_susceptible_excess = report.max_susceptible_excess.max(s.s - s0);
        report.min_compartment = report.min_compartment.min(s.min_compartment());
    }
    let slack = tol * bound;
    report.passed = report.max_population_excess <= slack
        && report.max_susceptible_excess <= slack
        && report.min_compartment >= -slack;
    report
}
