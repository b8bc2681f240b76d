//! Seeded per-path random streams.
//!
//! Each stream is ChaCha20 keyed by the master seed (expanded with `seed_from_u64`) with the
//! 64-bit ChaCha stream id set to the path index, so streams never overlap and can be consumed
//! in any order or on any thread.
//!
//! Standard normals use the Box–Muller transform on two 53-bit uniforms
//! `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)`:
//!
//! ```text
//! r = √(−2 ln u1),  n₀ = r·cos(2πu2),  n₁ = r·sin(2πu2)
//! ```
//!
//! `n₀` is returned first and `n₁` is cached for the next call.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * UNIT
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(n) = self.spare.take() {
            return n;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * sin);
        r * cos
    }
}
