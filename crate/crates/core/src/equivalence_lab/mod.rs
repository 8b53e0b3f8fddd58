//! Monte Carlo comparison of the CLR score and paired Hotelling statistics
//! under local alternatives.
//!
//! Row `i` of a replicate is `z_i = δ/√n + w_i` with `w_i` iid, mean zero
//! and covariance `Σ`. For such data `n (ξ_sc - ξ_hot)` converges in
//! distribution to
//!
//! ```text
//! K = q - q²,   q = uᵀ Σ⁻¹ u,   u = δ + V,   V ~ N(0, Σ)
//! ```
//!
//! [`run_equivalence_experiment`] draws both samples and reports their
//! two-sample Kolmogorov–Smirnov distance and paired quantiles.

mod distribution;

use rayon::prelude::*;
use serde::Serialize;

pub use distribution::{histogram, ks_statistic, quantile, HistogramData};

use crate::classic_tests::hotelling_statistic;
use crate::clr::score_statistic;
use crate::matched_data::PairedDifferences;
use crate::numerics::{derive_seed, GaussianSource, Matrix, RandomStream, SpdFactor};
use crate::{Error, Result};

/// Distribution of the standardized scalars behind each noise vector. Every
/// family has mean zero and unit variance; vectors are `L e` with `L` the
/// Cholesky factor of `Σ`, so their covariance is `Σ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    /// Uniform on `[-√3, √3]`.
    UniformScaled,
    /// `±1` with equal probability.
    RademacherMix,
}

impl NoiseFamily {
    fn draw(self, stream: &mut RandomStream) -> f64 {
        match self {
            Self::Gaussian => stream.next_std_normal(),
            Self::UniformScaled => (2.0 * stream.next_uniform() - 1.0) * 3f64.sqrt(),
            Self::RademacherMix => stream.next_sign(),
        }
    }
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Self::Gaussian),
            "uniform" | "uniform_scaled" | "uniform-scaled" => Ok(Self::UniformScaled),
            "rademacher" | "rademacher_mix" | "rademacher-mix" => Ok(Self::RademacherMix),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise family {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LocalAlternativeSpec {
    pub delta: Vec<f64>,
    pub sigma: Matrix,
    pub noise_family: NoiseFamily,
    /// Pairs per replicate.
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
}

impl LocalAlternativeSpec {
    pub fn new(delta: Vec<f64>, sigma: Matrix, n: usize, reps: usize, seed: u64) -> Self {
        Self {
            delta,
            sigma,
            noise_family: NoiseFamily::Gaussian,
            n,
            reps,
            seed,
        }
    }

    pub fn with_noise(mut self, family: NoiseFamily) -> Self {
        self.noise_family = family;
        self
    }

    pub fn p(&self) -> usize {
        self.delta.len()
    }

    /// Validates the spec and returns the Cholesky factor of `Σ`.
    pub fn sigma_factor(&self) -> Result<SpdFactor> {
        if self.delta.is_empty() {
            return Err(Error::InvalidArgument("delta must be non-empty".into()));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("delta".into()));
        }
        if self.sigma.rows() != self.p() || !self.sigma.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: self.sigma.rows(),
            });
        }
        if self.n == 0 || self.reps == 0 {
            return Err(Error::InvalidArgument("n and reps must be positive".into()));
        }
        SpdFactor::new(&self.sigma)
    }

    /// Stream seed for replicate `index`.
    pub fn replicate_seed(&self, index: u64) -> u64 {
        derive_seed(self.seed, index)
    }

    /// Stream seed for the direct draws of `K`; no replicate index maps to it.
    pub fn k_seed(&self) -> u64 {
        derive_seed(self.seed, u64::MAX)
    }
}

fn generate_with_factor(
    spec: &LocalAlternativeSpec,
    factor: &SpdFactor,
    replicate_index: u64,
) -> Result<PairedDifferences> {
    let (n, p) = (spec.n, spec.p());
    let mut stream = RandomStream::new(spec.replicate_seed(replicate_index));
    let shift: Vec<f64> = spec.delta.iter().map(|d| d / (n as f64).sqrt()).collect();
    let mut data = Vec::with_capacity(n * p);
    let mut e = vec![0.0; p];
    for _ in 0..n {
        e.iter_mut()
            .for_each(|v| *v = spec.noise_family.draw(&mut stream));
        let w = factor.mul_lower(&e)?;
        data.extend(shift.iter().zip(w).map(|(s, w)| s + w));
    }
    PairedDifferences::new(n, p, data)
}

/// One replicate of the local-alternative array; deterministic in
/// `(spec.seed, replicate_index)`.
pub fn generate_local_alternative(
    spec: &LocalAlternativeSpec,
    replicate_index: u64,
) -> Result<PairedDifferences> {
    let factor = spec.sigma_factor()?;
    generate_with_factor(spec, &factor, replicate_index)
}

/// `n (ξ_sc - ξ_hot)`.
pub fn scaled_difference(z: &PairedDifferences) -> Result<f64> {
    let hot = hotelling_statistic(z)?;
    let sc = score_statistic(z)?;
    Ok(z.n() as f64 * (sc - hot))
}

/// `q - q²` with `q = uᵀ Σ⁻¹ u`.
pub fn k_from_u(u: &[f64], sigma_factor: &SpdFactor) -> Result<f64> {
    let q = sigma_factor.quad_form_inv(u)?;
    Ok(q - q * q)
}

/// Draws of `K` with `V = L g`, `g` taken from `source`.
pub fn sample_k_with<S: GaussianSource>(
    delta: &[f64],
    sigma_factor: &SpdFactor,
    reps: usize,
    source: &mut S,
) -> Result<Vec<f64>> {
    if delta.len() != sigma_factor.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma_factor.dim(),
            found: delta.len(),
        });
    }
    let mut g = vec![0.0; delta.len()];
    (0..reps)
        .map(|_| {
            g.iter_mut().for_each(|v| *v = source.next_std_normal());
            let v = sigma_factor.mul_lower(&g)?;
            let u: Vec<f64> = delta.iter().zip(v).map(|(d, v)| d + v).collect();
            k_from_u(&u, sigma_factor)
        })
        .collect()
}

pub fn sample_k(delta: &[f64], sigma: &Matrix, reps: usize, seed: u64) -> Result<Vec<f64>> {
    let factor = SpdFactor::new(sigma)?;
    sample_k_with(delta, &factor, reps, &mut RandomStream::new(seed))
}

pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileRow {
    pub level: f64,
    pub empirical: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub delta: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub noise_family: NoiseFamily,
    /// `n (ξ_sc - ξ_hot)` per non-degenerate replicate, in replicate order.
    pub empirical: Vec<f64>,
    /// Direct draws of the limit variable.
    pub k_samples: Vec<f64>,
    pub ks_distance: f64,
    pub quantiles: Vec<QuantileRow>,
    /// Replicates skipped because `C` or `Ĩ` was singular.
    pub degenerate_count: usize,
}

impl ExperimentReport {
    /// Histograms of the empirical and `K` samples over a shared range.
    pub fn histograms(&self, bins: usize) -> Result<(HistogramData, HistogramData)> {
        let (lo, hi) = self
            .empirical
            .iter()
            .chain(&self.k_samples)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok((
            histogram(&self.empirical, bins, Some((lo, hi)))?,
            histogram(&self.k_samples, bins, Some((lo, hi)))?,
        ))
    }
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::CovarianceSingular | Error::SecondMomentSingular)
}

/// Runs `spec.reps` replicates (in parallel on the current rayon pool) and
/// compares `n (ξ_sc - ξ_hot)` with direct draws of `K`. Output is
/// independent of the thread count.
pub fn run_equivalence_experiment(spec: &LocalAlternativeSpec) -> Result<ExperimentReport> {
    let factor = spec.sigma_factor()?;
    let outcomes: Vec<Option<f64>> = (0..spec.reps as u64)
        .into_par_iter()
        .map(|i| {
            let z = generate_with_factor(spec, &factor, i)?;
            match scaled_difference(&z) {
                Ok(v) => Ok(Some(v)),
                Err(e) if is_degenerate(&e) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let empirical: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let degenerate_count = spec.reps - empirical.len();
    if degenerate_count * 10 > spec.reps {
        return Err(Error::TooManyDegenerate {
            degenerate: degenerate_count,
            reps: spec.reps,
        });
    }

    let k_samples = sample_k_with(
        &spec.delta,
        &factor,
        spec.reps,
        &mut RandomStream::new(spec.k_seed()),
    )?;
    let ks_distance = ks_statistic(&empirical, &k_samples)?;

    let mut emp_sorted = empirical.clone();
    emp_sorted.sort_by(f64::total_cmp);
    let mut k_sorted = k_samples.clone();
    k_sorted.sort_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS
        .iter()
        .map(|&level| QuantileRow {
            level,
            empirical: quantile(&emp_sorted, level),
            k: quantile(&k_sorted, level),
        })
        .collect();

    Ok(ExperimentReport {
        delta: spec.delta.clone(),
        n: spec.n,
        reps: spec.reps,
        seed: spec.seed,
        noise_family: spec.noise_family,
        empirical,
        k_samples,
        ks_distance,
        quantiles,
        degenerate_count,
    })
}
