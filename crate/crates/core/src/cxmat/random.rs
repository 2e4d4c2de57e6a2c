//! Seeded sampling of circularly-symmetric complex Gaussian matrices.
//!
//! Stream definition, so the draws can be reproduced elsewhere:
//!
//! * generator: xoshiro256** seeded from a `u64` through SplitMix64
//!   (the reference `seed_from_u64` expansion);
//! * uniform: `(next_u64() >> 11) * 2^-53`, a double in `[0, 1)`;
//! * one complex entry consumes two uniforms `u1`, `u2` (in that order) and
//!   applies Box–Muller with `r = sqrt(-2 ln(1 - u1))`: the real part is
//!   `r cos(2π u2) / √2`, the imaginary part `r sin(2π u2) / √2`;
//! * matrices are filled in row-major order.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand_core::{Rng as _, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use super::{ComplexMatrix, C64};
use crate::error::{invalid, Result};

/// Deterministic 64-bit seeded generator.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: Xoshiro256StarStar,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One CN(0, 1) sample.
    pub fn complex_gaussian(&mut self) -> C64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        C64::new(r * c * FRAC_1_SQRT_2, r * s * FRAC_1_SQRT_2)
    }
}

/// Derives the seed of trial `k` from a sweep seed.
///
/// `mix64(seed, k) = fmix(seed ^ fmix(k + 0x9E3779B97F4A7C15))` where
/// `fmix` is the SplitMix64 output function
/// (`z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`).
pub fn mix64(seed: u64, k: u64) -> u64 {
    fn fmix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    fmix(seed ^ fmix(k.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// A `rows x cols` matrix of i.i.d. CN(0, 1) entries.
pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return invalid(format!("gaussian matrix needs nonzero dimensions, got {rows}x{cols}"));
    }
    let data = (0..rows * cols).map(|_| rng.complex_gaussian()).collect();
    ComplexMatrix::from_vec(rows, cols, data)
}
