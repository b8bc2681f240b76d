use thiserror::Error;

/// Errors raised by the model, integrators and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be strictly positive")]
    NonPositiveParameter(&'static str),

    #[error("parameter `{0}` must be finite")]
    NonFiniteParameter(&'static str),

    #[error("reproduction number is zero; threshold quantities dividing by sqrt(R0) are undefined")]
    DegenerateR0,

    #[error("stationary law is a point mass at 0 (delta = 0)")]
    DegenerateStationary,

    #[error("integration step produced negative {component} = {value:e}; reduce dt")]
    StepProducedNegative { component: &'static str, value: f64 },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("fewer usable nodes than required in the fit/averaging window")]
    EmptyFitWindow,

    #[error("histograms cannot be placed on a common binning (disjoint supports)")]
    IncompatibleBinning,

    #[error("{} path(s) failed; first: path {} ({})", .0.len(), .0[0].0, .0[0].1)]
    PathFailures(Vec<(usize, Error)>),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
