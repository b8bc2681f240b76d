//! Solution containers: time grids, recorded trajectories and derived series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{extinction_weights, ModelParams, State};
use crate::scalar::Scalar;

/// Uniform grid `0, dt, 2dt, …` closed at `horizon` by a possibly shortened last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    pub horizon: T,
    pub dt: T,
    pub n_steps: usize,
}

impl<T: Scalar> TimeGrid<T> {
    pub fn new(horizon: T, dt: T) -> Result<Self> {
        if !(horizon > T::zero() && horizon.is_finite()) {
            return Err(Error::InvalidConfig("horizon must be positive and finite".into()));
        }
        if !(dt > T::zero() && dt.is_finite()) {
            return Err(Error::InvalidConfig("dt must be positive and finite".into()));
        }
        let ratio = (horizon / dt).as_f64();
        // Absorb round-off so that horizon = n·dt does not produce a sliver step.
        let n_steps = ((ratio - 1e-9).ceil() as usize).max(1);
        Ok(Self {
            horizon,
            dt,
            n_steps,
        })
    }

    /// Time of node `k`, `0 ≤ k ≤ n_steps`.
    #[inline]
    pub fn time(&self, k: usize) -> T {
        if k >= self.n_steps {
            self.horizon
        } else {
            T::lit(k as f64) * self.dt
        }
    }

    /// Length of step `k` (from node `k` to node `k + 1`).
    #[inline]
    pub fn step(&self, k: usize) -> T {
        self.time(k + 1) - self.time(k)
    }

    /// Nodes kept when every `stride`-th node is recorded; the final node is always kept.
    pub fn recorded_nodes(&self, stride: usize) -> usize {
        self.n_steps / stride + 1 + usize::from(!self.n_steps.is_multiple_of(stride))
    }

    /// Smallest stride that keeps at most `max_nodes` recorded nodes.
    pub fn stride_for(&self, max_nodes: usize) -> usize {
        let budget = max_nodes.saturating_sub(1).max(1);
        self.n_steps.div_ceil(budget).max(1)
    }
}

/// Scalar series that can be read off a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Component {
    S,
    V,
    E,
    I,
    Z,
    /// Total population `S + V + E + I`.
    N,
    /// Transmission coefficient `β̄e^z`.
    Beta,
    /// Extinction functional `ω₁/(m+σ+ξ)·E + ω₂/(m+γ+η)·I`.
    Ve,
    /// `e^{a·z}` for the given exponent `a`.
    ExpZ(f64),
}

/// Evaluates [`Component`]s against a fixed parameter set.
#[derive(Debug, Clone, Copy)]
pub struct SeriesContext<T> {
    beta_bar: T,
    ve_weights: Option<(T, T)>,
}

impl<T: Scalar> SeriesContext<T> {
    pub fn new(p: &ModelParams<T>) -> Self {
        let ve_weights = extinction_weights(p)
            .ok()
            .map(|(w1, w2)| (w1 / p.exposed_exit_rate(), w2 / p.infectious_exit_rate()));
        Self {
            beta_bar: p.beta_bar,
            ve_weights,
        }
    }

    pub fn value(&self, s: &State<T>, c: Component) -> Result<T> {
        Ok(match c {
            Component::S => s.s,
            Component::V => s.v,
            Component::E => s.e,
            Component::I => s.i,
            Component::Z => s.z,
            Component::N => s.total(),
            Component::Beta => self.beta_bar * s.z.exp(),
            Component::Ve => {
                let (a, b) = self.ve_weights.ok_or(Error::DegenerateR0)?;
                a * s.e + b * s.i
            }
            Component::ExpZ(a) => (T::lit(a) * s.z).exp(),
        })
    }
}

/// Quantities tracked by [`WindowIntegrals`], in storage order.
pub const TRACKED: [Component; 6] = [
    Component::S,
    Component::V,
    Component::E,
    Component::I,
    Component::Z,
    Component::N,
];

/// Trapezoidal integrals of the tracked series over the four quarters of `[0, T]`,
/// accumulated at the full integration resolution regardless of the recording stride.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowIntegrals<T> {
    pub horizon: T,
    pub quarters: [[T; 6]; 4],
}

impl<T: Scalar> WindowIntegrals<T> {
    pub fn new(horizon: T) -> Self {
        Self {
            horizon,
            quarters: [[T::zero(); 6]; 4],
        }
    }

    fn values(s: &State<T>) -> [T; 6] {
        [s.s, s.v, s.e, s.i, s.z, s.total()]
    }

    /// Adds the linear-interpolant integral of one step `[t0, t1]` to every overlapping quarter.
    pub fn accumulate(&mut self, t0: T, y0: &State<T>, t1: T, y1: &State<T>) {
        let h = t1 - t0;
        if h <= T::zero() {
            return;
        }
        let v0 = Self::values(y0);
        let v1 = Self::values(y1);
        let quarter = self.horizon / T::lit(4.0);
        for (q, acc) in self.quarters.iter_mut().enumerate() {
            let a = quarter * T::lit(q as f64);
            let b = if q == 3 { self.horizon } else { a + quarter };
            let lo = t0.max(a);
            let hi = t1.min(b);
            if hi <= lo {
                continue;
            }
            let (wl, wh) = ((lo - t0) / h, (hi - t0) / h);
            for j in 0..6 {
                let yl = v0[j] + (v1[j] - v0[j]) * wl;
                let yh = v0[j] + (v1[j] - v0[j]) * wh;
                acc[j] = acc[j] + (hi - lo) * (yl + yh) / T::lit(2.0);
            }
        }
    }

    /// Time average of a tracked component over quarters `first..4`.
    pub fn trailing_average(&self, component: Component, first: usize) -> Option<T> {
        let j = TRACKED.iter().position(|c| *c == component)?;
        if first >= 4 {
            return None;
        }
        let total = self.quarters[first..]
            .iter()
            .fold(T::zero(), |acc, q| acc + q[j]);
        let span = self.horizon * T::lit((4 - first) as f64 / 4.0);
        Some(total / span)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta<T> {
    pub params: ModelParams<T>,
    pub scheme: String,
    pub dt: T,
    /// `None` for deterministic runs.
    pub seed: Option<u64>,
    pub path_index: Option<u64>,
}

/// States at recorded nodes of a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<State<T>>,
    pub meta: TrajectoryMeta<T>,
    /// Full-resolution window integrals, when the producer tracked them.
    pub windows: Option<WindowIntegrals<T>>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }

    pub fn last(&self) -> Option<&State<T>> {
        self.states.last()
    }

    pub fn series(&self, component: Component) -> Result<Vec<T>> {
        let ctx = SeriesContext::new(&self.meta.params);
        self.states.iter().map(|s| ctx.value(s, component)).collect()
    }

    /// Checks the container invariants: matching lengths, increasing times, nonnegative compartments
    /// (up to `neg_tol`).
    pub fn is_well_formed(&self, neg_tol: T) -> bool {
        self.times.len() == self.states.len()
            && self.times.windows(2).all(|w| w[0] < w[1])
            && self.states.iter().all(|s| s.min_compartment() >= -neg_tol)
    }
}
