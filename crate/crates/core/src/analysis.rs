//! Ensemble diagnostics for the persistence and extinction thresholds.
//!
//! Statistics are computed in `f64` whatever the trajectory scalar is.

// `!(a < b)` is used on purpose so that NaN inputs fall into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::engine::Ensemble;
use crate::error::{Error, Result};
use crate::model::{extinction_weights, r0_e, r0_s, ModelParams, State};
use crate::scalar::Scalar;
use crate::stats::linear_fit;
use crate::trajectory::{Component, SeriesContext, Trajectory};

/// `V_e` below this is treated as extinction reached; the log-linear fit stops there.
pub const VE_UNDERFLOW: f64 = 1e-300;
/// Minimum number of nodes for a slope fit or a time average.
pub const MIN_FIT_NODES: usize = 10;

/// `ω₁/(m+σ+ξ)·E + ω₂/(m+γ+η)·I`.
pub fn extinction_functional<T: Scalar>(s: &State<T>, p: &ModelParams<T>) -> Result<T> {
    let (w1, w2) = extinction_weights(p)?;
    Ok(w1 / p.exposed_exit_rate() * s.e + w2 / p.infectious_exit_rate() * s.i)
}

/// Asymptotic decay rate bound `min{m+σ+ξ, m+γ+η}·(R0ᵉ − 1)`.
pub fn extinction_rate_bound<T: Scalar>(p: &ModelParams<T>) -> Result<f64> {
    let rate = p.exposed_exit_rate().min(p.infectious_exit_rate()).as_f64();
    Ok(rate * (r0_e(p)?.as_f64() - 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionReport {
    /// Least-squares slope of `ln V_e(t)` over the fit window.
    pub slope: f64,
    pub slope_std_err: f64,
    pub bound: f64,
    /// `bound − slope`.
    pub margin: f64,
    /// `2·slope_std_err`.
    pub slack: f64,
    pub passed: bool,
    pub fit_window: [f64; 2],
    pub fit_nodes: usize,
    /// Time at which `V_e` first dropped below [`VE_UNDERFLOW`], if it did.
    pub underflow_at: Option<f64>,
}

/// Fits the exponential decay rate of `V_e` over the trailing `fit_fraction` of the horizon.
///
/// If `V_e` underflows, the horizon used for the window is cut back to the last usable node.
pub fn extinction_rate_estimate<T: Scalar>(
    traj: &Trajectory<T>,
    p: &ModelParams<T>,
    fit_fraction: f64,
) -> Result<ExtinctionReport> {
    if !(fit_fraction > 0.0 && fit_fraction <= 1.0) {
        return Err(Error::InvalidConfig("fit_fraction must lie in (0, 1]".into()));
    }
    let bound = extinction_rate_bound(p)?;
    let mut times = Vec::with_capacity(traj.len());
    let mut logs = Vec::with_capacity(traj.len());
    let mut underflow_at = None;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let ve = extinction_functional(s, p)?.as_f64();
        if !(ve >= VE_UNDERFLOW) {
            underflow_at = Some(t.as_f64());
            break;
        }
        times.push(t.as_f64());
        logs.push(ve.ln());
    }
    let end = *times.last().ok_or(Error::EmptyFitWindow)?;
    let start = end * (1.0 - fit_fraction);
    let first = times.partition_point(|t| *t < start);
    let (xs, ys) = (&times[first..], &logs[first..]);
    if xs.len() < MIN_FIT_NODES {
        return Err(Error::EmptyFitWindow);
    }
    let fit = linear_fit(xs, ys).ok_or(Error::EmptyFitWindow)?;
    let slack = 2.0 * fit.slope_std_err;
    Ok(ExtinctionReport {
        slope: fit.slope,
        slope_std_err: fit.slope_std_err,
        bound,
        margin: bound - fit.slope,
        slack,
        passed: fit.slope <= bound + slack,
        fit_window: [xs[0], end],
        fit_nodes: xs.len(),
        underflow_at,
    })
}

/// Trapezoidal time average of a component over `[burn_in, T]` on the recorded nodes,
/// interpolating linearly at `burn_in`.
pub fn time_average<T: Scalar>(traj: &Trajectory<T>, component: Component, burn_in: f64) -> Result<f64> {
    let ctx = SeriesContext::new(&traj.meta.params);
    let horizon = traj.horizon().as_f64();
    if traj.len() < 2 || !(burn_in < horizon) {
        return Err(Error::EmptyFitWindow);
    }
    let mut integral = 0.0;
    let start = burn_in.max(traj.times[0].as_f64());
    for k in 0..traj.len() - 1 {
        let (t0, t1) = (traj.times[k].as_f64(), traj.times[k + 1].as_f64());
        if t1 <= start {
            continue;
        }
        let y0 = ctx.value(&traj.states[k], component)?.as_f64();
        let y1 = ctx.value(&traj.states[k + 1], component)?.as_f64();
        let (lo, ylo) = if t0 < start {
            (start, y0 + (y1 - y0) * (start - t0) / (t1 - t0))
        } else {
            (t0, y0)
        };
        integral += (t1 - lo) * (ylo + y1) / 2.0;
    }
    Ok(integral / (horizon - start))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub n_samples: usize,
    pub burn_in: f64,
}

/// Relative floor on the histogram range, so that (near) point masses land in one bin.
const MIN_RELATIVE_WIDTH: f64 = 1e-3;

impl Histogram {
    /// `bins` equal-width bins over `[min, max]` padded by 1% of the range on both sides.
    ///
    /// Ranges narrower than 0.1% of the sample magnitude are widened to that width about
    /// their midpoint.
    pub fn edges_for(samples: &[f64], bins: usize) -> Result<Vec<f64>> {
        if bins < 2 {
            return Err(Error::InvalidConfig("histograms need at least 2 bins".into()));
        }
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::EmptyFitWindow);
        }
        let pad = 0.01 * (hi - lo);
        let (mut lo, mut hi) = (lo - pad, hi + pad);
        let min_width = MIN_RELATIVE_WIDTH * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
        if hi - lo < min_width {
            let mid = 0.5 * (lo + hi);
            lo = mid - 0.5 * min_width;
            hi = mid + 0.5 * min_width;
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|j| lo + j as f64 * width).collect();
        edges.push(hi);
        Ok(edges)
    }

    /// Normalised histogram of the samples falling inside `edges`; samples outside are dropped.
    pub fn from_samples(samples: &[f64], edges: Vec<f64>, burn_in: f64) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig("histogram edges must be strictly increasing".into()));
        }
        let bins = edges.len() - 1;
        let mut counts = vec![0u64; bins];
        let (lo, hi) = (edges[0], edges[bins]);
        for &x in samples {
            if !(x >= lo && x <= hi) {
                continue;
            }
            let j = edges.partition_point(|e| *e <= x).saturating_sub(1).min(bins - 1);
            counts[j] += 1;
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyFitWindow);
        }
        Ok(Self {
            masses: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            edges,
            n_samples: n as usize,
            burn_in,
        })
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    /// Redistributes this histogram's mass onto `edges`, assuming uniform density within bins.
    /// Returns the new masses and the mass falling outside `edges`.
    pub fn rebin(&self, edges: &[f64]) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; edges.len() - 1];
        let mut placed = 0.0;
        for (j, &mass) in self.masses.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let (l, r) = (self.edges[j], self.edges[j + 1]);
            for (i, slot) in out.iter_mut().enumerate() {
                let overlap = r.min(edges[i + 1]) - l.max(edges[i]);
                if overlap > 0.0 {
                    let share = mass * overlap / (r - l);
                    *slot += share;
                    placed += share;
                }
            }
        }
        (out, (1.0 - placed).max(0.0))
    }
}

fn pooled_samples<T: Scalar>(
    ens: &Ensemble<T>,
    component: Component,
    from: f64,
    to: f64,
    include_end: bool,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for traj in &ens.trajectories {
        let ctx = SeriesContext::new(&traj.meta.params);
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let t = t.as_f64();
            if t >= from && (t < to || (include_end && t <= to)) {
                out.push(ctx.value(s, component)?.as_f64());
            }
        }
    }
    Ok(out)
}

/// Pooled histogram of a component over all recorded nodes with `t ≥ burn_in`.
pub fn stationary_histogram<T: Scalar>(
    ens: &Ensemble<T>,
    component: Component,
    burn_in: f64,
    bins: usize,
) -> Result<Histogram> {
    let horizon = ens.config.horizon.as_f64();
    if !(burn_in < horizon) {
        return Err(Error::EmptyFitWindow);
    }
    let samples = pooled_samples(ens, component, burn_in, horizon, true)?;
    if samples.is_empty() {
        return Err(Error::EmptyFitWindow);
    }
    let edges = Histogram::edges_for(&samples, bins)?;
    Histogram::from_samples(&samples, edges, burn_in)
}

/// Total-variation distance `½Σ|aᵢ − bᵢ|`.
///
/// If the binnings differ, `b` is re-binned onto `a`'s edges and any of `b`'s mass outside
/// them counts fully towards the distance.
pub fn histogram_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    let (b_masses, outside) = if a.edges == b.edges {
        (b.masses.clone(), 0.0)
    } else {
        let (masses, outside) = b.rebin(&a.edges);
        if outside >= 1.0 - 1e-12 {
            return Err(Error::IncompatibleBinning);
        }
        (masses, outside)
    };
    let sum: f64 = a.masses.iter().zip(&b_masses).map(|(x, y)| (x - y).abs()).sum();
    Ok((0.5 * (sum + outside)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PersistenceOptions {
    /// Maximum TV distance between the two late-window histograms.
    pub tv_threshold: f64,
    /// Persistence level as a multiple of `Π/m`.
    pub persist_epsilon_factor: f64,
    /// Fraction of paths that must stay above the persistence level.
    pub pass_fraction: f64,
    pub bins: usize,
}

impl Default for PersistenceOptions {
    fn default() -> Self {
        Self {
            tv_threshold: 0.05,
            persist_epsilon_factor: 1e-4,
            pass_fraction: 0.95,
            bins: 25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceVerdict {
    pub r0_s: f64,
    /// False when the parameters do not satisfy `R0ˢ > 1`; the verdict is still computed.
    pub r0_s_above_one: bool,
    pub tv_distance: f64,
    pub tv_threshold: f64,
    pub persist_epsilon: f64,
    pub fraction_persistent: f64,
    pub pass_fraction: f64,
    pub n_paths: usize,
    /// Pooled `I` histogram over `[T/2, 3T/4)`.
    pub early: Histogram,
    /// Pooled `I` histogram over `[3T/4, T]`.
    pub late: Histogram,
    /// Pooled `I` histogram over `[T/2, T]` on the same edges.
    pub pooled: Histogram,
    pub stabilised: bool,
    pub occupied: bool,
    pub passed: bool,
}

/// Evidence for a stationary, non-degenerate law of `I`: two-window histogram stabilisation
/// and late time averages bounded away from zero.
pub fn persistence_verdict<T: Scalar>(
    ens: &Ensemble<T>,
    p: &ModelParams<T>,
    opts: &PersistenceOptions,
) -> Result<PersistenceVerdict> {
    let horizon = ens.config.horizon.as_f64();
    let (half, three_q) = (0.5 * horizon, 0.75 * horizon);
    let early_samples = pooled_samples(ens, Component::I, half, three_q, false)?;
    let late_samples = pooled_samples(ens, Component::I, three_q, horizon, true)?;
    let all: Vec<f64> = early_samples.iter().chain(&late_samples).copied().collect();
    let edges = Histogram::edges_for(&all, opts.bins)?;
    let early = Histogram::from_samples(&early_samples, edges.clone(), half)?;
    let late = Histogram::from_samples(&late_samples, edges.clone(), three_q)?;
    let pooled = Histogram::from_samples(&all, edges, half)?;
    let tv_distance = histogram_distance(&early, &late)?;

    let persist_epsilon = opts.persist_epsilon_factor * p.population_bound().as_f64();
    let mut persistent = 0usize;
    for traj in &ens.trajectories {
        let avg = match traj.windows.as_ref().and_then(|w| w.trailing_average(Component::I, 2)) {
            Some(a) => a.as_f64(),
            None => time_average(traj, Component::I, half)?,
        };
        if avg > persist_epsilon {
            persistent += 1;
        }
    }
    let n_paths = ens.trajectories.len();
    let fraction_persistent = persistent as f64 / n_paths as f64;
    let stabilised = tv_distance < opts.tv_threshold;
    let occupied = fraction_persistent >= opts.pass_fraction;
    let r0_s = r0_s(p).as_f64();
    Ok(PersistenceVerdict {
        r0_s,
        r0_s_above_one: r0_s > 1.0,
        tv_distance,
        tv_threshold: opts.tv_threshold,
        persist_epsilon,
        fraction_persistent,
        pass_fraction: opts.pass_fraction,
        n_paths,
        early,
        late,
        pooled,
        stabilised,
        occupied,
        passed: stabilised && occupied,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtinctionOptions {
    pub fit_fraction: f64,
    pub pass_fraction: f64,
}

impl Default for ExtinctionOptions {
    fn default() -> Self {
        Self {
            fit_fraction: 0.5,
            pass_fraction: 0.95,
        }
    }
}

/// Per-path outcome of the decay-rate check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PathExtinction {
    Fitted(ExtinctionReport),
    /// `V_e` underflowed before enough nodes were available for a fit.
    ExtinctBeforeFit { underflow_at: Option<f64> },
}

impl PathExtinction {
    pub fn passed(&self) -> bool {
        match self {
            PathExtinction::Fitted(r) => r.passed,
            PathExtinction::ExtinctBeforeFit { .. } => true,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        match self {
            PathExtinction::Fitted(r) => Some(r.slope),
            PathExtinction::ExtinctBeforeFit { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionVerdict {
    pub r0_e: f64,
    pub bound: f64,
    pub fit_fraction: f64,
    pub fraction_passing: f64,
    pub pass_fraction: f64,
    pub n_paths: usize,
    pub n_extinct_before_fit: usize,
    pub mean_slope: Option<f64>,
    pub paths: Vec<PathExtinction>,
    pub passed: bool,
}

/// Classifies one path; early underflow of `V_e` counts as extinction.
pub fn path_extinction<T: Scalar>(traj: &Trajectory<T>, p: &ModelParams<T>, fit_fraction: f64) -> Result<PathExtinction> {
    match extinction_rate_estimate(traj, p, fit_fraction) {
        Ok(r) => Ok(PathExtinction::Fitted(r)),
        Err(Error::EmptyFitWindow) => {
            let ctx = SeriesContext::new(p);
            let underflow_at = traj
                .times
                .iter()
                .zip(&traj.states)
                .find(|(_, s)| ctx.value(s, Component::Ve).map(|v| !(v.as_f64() >= VE_UNDERFLOW)).unwrap_or(false))
                .map(|(t, _)| t.as_f64());
            match underflow_at {
                Some(_) => Ok(PathExtinction::ExtinctBeforeFit { underflow_at }),
                None => Err(Error::EmptyFitWindow),
            }
        }
        Err(e) => Err(e),
    }
}

/// Aggregates per-path outcomes into the ensemble verdict.
pub fn extinction_verdict_from_paths<T: Scalar>(
    paths: Vec<PathExtinction>,
    p: &ModelParams<T>,
    opts: &ExtinctionOptions,
) -> Result<ExtinctionVerdict> {
    let n_paths = paths.len();
    if n_paths == 0 {
        return Err(Error::EmptyFitWindow);
    }
    let passing = paths.iter().filter(|r| r.passed()).count();
    let slopes: Vec<f64> = paths.iter().filter_map(PathExtinction::slope).collect();
    let fraction_passing = passing as f64 / n_paths as f64;
    Ok(ExtinctionVerdict {
        r0_e: r0_e(p)?.as_f64(),
        bound: extinction_rate_bound(p)?,
        fit_fraction: opts.fit_fraction,
        fraction_passing,
        pass_fraction: opts.pass_fraction,
        n_paths,
        n_extinct_before_fit: n_paths - slopes.len(),
        mean_slope: (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64),
        paths,
        passed: fraction_passing >= opts.pass_fraction,
    })
}

pub fn extinction_verdict<T: Scalar>(
    ens: &Ensemble<T>,
    p: &ModelParams<T>,
    opts: &ExtinctionOptions,
) -> Result<ExtinctionVerdict> {
    let paths = ens
        .trajectories
        .iter()
        .map(|traj| path_extinction(traj, p, opts.fit_fraction))
        .collect::<Result<Vec<_>>>()?;
    extinction_verdict_from_paths(paths, p, opts)
}
