//! Fixed-step classical RK4 for the compartments with the transmission exponent held fixed.

use crate::error::{Error, Result};
use crate::model::{compartment_drift, ModelParams, State};
use crate::scalar::Scalar;
use crate::trajectory::{TimeGrid, Trajectory, TrajectoryMeta, WindowIntegrals};

pub const RK4_SCHEME: &str = "rk4";

/// Undershoot below zero tolerated before a step is rejected: `1e−12·Π/m`.
#[inline]
pub fn negativity_tolerance<T: Scalar>(p: &ModelParams<T>) -> T {
    T::lit(1e-12) * p.population_bound()
}

/// Default step: 1% of the shortest mean residence time among
/// `1/m`, `1/(m+γ+η)`, `1/(m+σ+ξ)` and `1/(m+ω)`.
pub fn default_dt<T: Scalar>(p: &ModelParams<T>) -> T {
    let fastest = p
        .m
        .max(p.infectious_exit_rate())
        .max(p.exposed_exit_rate())
        .max(p.m + p.omega);
    T::lit(0.01) / fastest
}

pub(crate) fn check_nonnegative<T: Scalar>(s: &State<T>, p: &ModelParams<T>) -> Result<()> {
    let floor = -negativity_tolerance(p);
    for (name, value) in s.compartments() {
        if value < floor || value.is_nan() {
            return Err(Error::StepProducedNegative {
                component: name,
                value: value.as_f64(),
            });
        }
    }
    Ok(())
}

/// One RK4 step of length `dt` for `(S, V, E, I)` with `β = β̄·e^{z_frozen}`.
/// The `z` slot of the input is returned unchanged.
pub fn rk4_step<T: Scalar>(s: &State<T>, dt: T, p: &ModelParams<T>, z_frozen: T) -> Result<State<T>> {
    let beta = p.beta_bar * z_frozen.exp();
    let half = dt / T::lit(2.0);
    let k1 = compartment_drift(s, p, beta);
    let k2 = compartment_drift(&(*s + k1 * half), p, beta);
    let k3 = compartment_drift(&(*s + k2 * half), p, beta);
    let k4 = compartment_drift(&(*s + k3 * dt), p, beta);
    let two = T::lit(2.0);
    let next = *s + (k1 + k2 * two + k3 * two + k4) * (dt / T::lit(6.0));
    check_nonnegative(&next, p)?;
    Ok(State { z: s.z, ..next })
}

/// Integrates the deterministic model from `init` over `[0, horizon]`, recording every node.
///
/// The transmission exponent stays at `init.z` (so `init.z = 0` gives `β = β̄`).
pub fn integrate_deterministic<T: Scalar>(
    p: &ModelParams<T>,
    init: State<T>,
    horizon: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let grid = TimeGrid::new(horizon, dt)?;
    check_nonnegative(&init, p)?;
    let mut times = Vec::with_capacity(grid.n_steps + 1);
    let mut states = Vec::with_capacity(grid.n_steps + 1);
    let mut windows = WindowIntegrals::new(horizon);
    let mut current = init;
    times.push(T::zero());
    states.push(current);
    for k in 0..grid.n_steps {
        let next = rk4_step(&current, grid.step(k), p, init.z)?;
        windows.accumulate(grid.time(k), &current, grid.time(k + 1), &next);
        current = next;
        times.push(grid.time(k + 1));
        states.push(current);
    }
    Ok(Trajectory {
        times,
        states,
        meta: TrajectoryMeta {
            params: *p,
            scheme: RK4_SCHEME.to_string(),
            dt,
            seed: None,
            path_index: None,
        },
        windows: Some(windows),
    })
}
