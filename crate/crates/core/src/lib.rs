//! Stochastic SVEIS epidemic model whose transmission rate follows a Black–Karasinski
//! (log-Ornstein–Uhlenbeck) process.
//!
//! * [`model`]: parameters, drift, disease-free equilibrium and the thresholds `R0`, `R0ˢ`, `R0ᵉ`.
//! * [`ou`]: exact transitions and stationary moments of the log-transmission deviation `z`.
//! * [`ode`]: fixed-step RK4 for the compartments with `z` frozen.
//! * [`engine`]: splitting-scheme paths and reproducible parallel ensembles.
//! * [`analysis`]: extinction-rate fits, time averages, histograms and verdicts.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the `*F64` / `*F32` aliases below
//! name the concrete instantiations.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod model;
pub mod ode;
pub mod ou;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use analysis::{
    extinction_functional, extinction_rate_estimate, extinction_verdict, histogram_distance,
    persistence_verdict, stationary_histogram, time_average, ExtinctionOptions, ExtinctionReport,
    ExtinctionVerdict, Histogram, PersistenceOptions, PersistenceVerdict,
};
pub use engine::{check_gamma, simulate_ensemble, simulate_path, Ensemble, GammaReport, Scheme, SimConfig, ZHold};
pub use model::{dfe, drift, extinction_weights, r0, r0_e, r0_s, thresholds, ModelParams, Regime, State, ThresholdReport};
pub use ode::{default_dt, integrate_deterministic, rk4_step};
pub use ou::{abs_expm1_bound, ou_exp_moment, ou_stationary_density, ou_stationary_sample, ou_step_exact, OuParams};
pub use rng::RngStream;
pub use trajectory::{Component, TimeGrid, Trajectory};

pub type ModelParamsF64 = ModelParams<f64>;
pub type StateF64 = State<f64>;
pub type OuParamsF64 = OuParams<f64>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type EnsembleF64 = Ensemble<f64>;
pub type ThresholdReportF64 = ThresholdReport<f64>;

pub type ModelParamsF32 = ModelParams<f32>;
pub type StateF32 = State<f32>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type SimConfigF32 = SimConfig<f32>;
