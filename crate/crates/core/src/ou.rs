//! The centred Ornstein–Uhlenbeck process `dz = −θz dt + δ dB` driving `ln β − ln β̄`.
//!
//! Transitions are sampled exactly:
//!
//! ```text
//! z(t+h) | z(t) ~ N(z(t)·e^{−θh}, δ²(1 − e^{−2θh}) / (2θ))
//! ```
//!
//! and the stationary law is `N(0, δ²/(2θ))` with density `π(z) = √θ/(δ√π)·exp(−θz²/δ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams<T> {
    /// Reversion speed.
    pub theta: T,
    /// Volatility.
    pub delta: T,
}

impl<T: Scalar> OuParams<T> {
    pub fn new(theta: T, delta: T) -> Result<Self> {
        if !(theta > T::zero() && theta.is_finite()) {
            return Err(Error::NonPositiveParameter("theta"));
        }
        if !(delta >= T::zero() && delta.is_finite()) {
            return Err(Error::NonPositiveParameter("delta"));
        }
        Ok(Self { theta, delta })
    }

    /// `E[z(t+h) | z(t) = z]`.
    #[inline]
    pub fn conditional_mean(&self, z: T, h: T) -> T {
        z * (-self.theta * h).exp()
    }

    /// `Var[z(t+h) | z(t)]`, computed with `expm1` so it stays accurate for small `θh`.
    #[inline]
    pub fn conditional_variance(&self, h: T) -> T {
        -self.delta * self.delta * (T::lit(-2.0) * self.theta * h).exp_m1()
            / (T::lit(2.0) * self.theta)
    }

    #[inline]
    pub fn stationary_variance(&self) -> T {
        self.delta * self.delta / (T::lit(2.0) * self.theta)
    }
}

/// Precomputed exact transition for a fixed step length.
#[derive(Debug, Clone, Copy)]
pub struct OuTransition<T> {
    decay: T,
    std_dev: T,
}

impl<T: Scalar> OuTransition<T> {
    pub fn new(p: &OuParams<T>, h: T) -> Self {
        Self {
            decay: (-p.theta * h).exp(),
            std_dev: p.conditional_variance(h).sqrt(),
        }
    }

    #[inline]
    pub fn decay(&self) -> T {
        self.decay
    }

    #[inline]
    pub fn std_dev(&self) -> T {
        self.std_dev
    }

    /// Advances `z` with an already drawn standard normal.
    #[inline]
    pub fn apply(&self, z: T, normal: f64) -> T {
        z * self.decay + self.std_dev * T::lit(normal)
    }

    #[inline]
    pub fn sample(&self, z: T, rng: &mut RngStream) -> T {
        self.apply(z, rng.standard_normal())
    }
}

/// One exact transition of length `dt`. Always consumes exactly one normal draw.
pub fn ou_step_exact<T: Scalar>(z: T, dt: T, p: &OuParams<T>, rng: &mut RngStream) -> T {
    debug_assert!(dt > T::zero());
    OuTransition::new(p, dt).sample(z, rng)
}

/// One draw from the stationary law `N(0, δ²/(2θ))`.
pub fn ou_stationary_sample<T: Scalar>(p: &OuParams<T>, rng: &mut RngStream) -> Result<T> {
    if p.delta <= T::zero() {
        return Err(Error::DegenerateStationary);
    }
    Ok(p.stationary_variance().sqrt() * T::lit(rng.standard_normal()))
}

pub fn ou_stationary_density<T: Scalar>(z: T, p: &OuParams<T>) -> Result<T> {
    if p.delta <= T::zero() {
        return Err(Error::DegenerateStationary);
    }
    let norm = p.theta.sqrt() / (p.delta * T::PI().sqrt());
    Ok(norm * (-(p.theta / (p.delta * p.delta)) * z * z).exp())
}

/// `E[e^{a z}]` under the stationary law: `exp(a²δ²/(4θ))`.
pub fn ou_exp_moment<T: Scalar>(a: T, p: &OuParams<T>) -> T {
    (a * a * p.delta * p.delta / (T::lit(4.0) * p.theta)).exp()
}

/// `√(E[(e^z − 1)²]) = √(e^{δ²/θ} − 2e^{δ²/(4θ)} + 1)`, the Hölder bound on `E|e^z − 1|`.
pub fn abs_expm1_bound<T: Scalar>(p: &OuParams<T>) -> T {
    let second = ou_exp_moment(T::lit(2.0), p);
    let first = ou_exp_moment(T::one(), p);
    // Guard against a tiny negative value from cancellation when δ²/θ is near 0.
    (second - T::lit(2.0) * first + T::one()).max(T::zero()).sqrt()
}
