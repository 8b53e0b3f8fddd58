//! Seeded Gaussian variates.
//!
//! The generator is ChaCha8 seeded through `seed_from_u64`, which is
//! platform-independent. Standard normals come from the Marsaglia polar
//! method; the second variate of each accepted pair is cached and returned by
//! the next call.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::SpdFactor;
use crate::{Error, Result};

/// Source of independent standard normal variates.
pub trait GaussianSource {
    fn next_std_normal(&mut self) -> f64;
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl GaussianSource for RandomStream {
    fn next_std_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let scale = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v * scale);
                return u * scale;
            }
        }
    }
}

pub fn normal_stream(seed: u64) -> RandomStream {
    RandomStream::new(seed)
}

pub fn draw_std_normal<S: GaussianSource>(stream: &mut S) -> f64 {
    stream.next_std_normal()
}

/// `mean + L g` with `g` a vector of independent standard normals.
pub fn draw_mvn<S: GaussianSource>(
    stream: &mut S,
    mean: &[f64],
    chol: &SpdFactor,
) -> Result<Vec<f64>> {
    if mean.len() != chol.dim() {
        return Err(Error::DimensionMismatch {
            expected: chol.dim(),
            found: mean.len(),
        });
    }
    let g: Vec<f64> = (0..mean.len()).map(|_| stream.next_std_normal()).collect();
    let lg = chol.mul_lower(&g)?;
    Ok(mean.iter().zip(lg).map(|(m, x)| m + x).collect())
}

/// SplitMix64 finalizer.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for the `index`-th independent consumer of `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base ^ mix64(index)
}
