//! Conditional likelihood for strata with `k` cases among `m` members.
//!
//! Each stratum contributes
//!
//! ```text
//! Σ_{cases} βᵀx_j - log Σ_{J ⊂ {1..m}, |J| = k} exp(Σ_{j ∈ J} βᵀx_j)
//! ```
//!
//! The denominator is the degree-`k` elementary symmetric polynomial of the
//! weights `w_j = exp(βᵀx_j)`. [`strata_loglik_bruteforce`] enumerates the
//! subsets; the recursive evaluators build the polynomial with
//! `B(j, r) = B(j-1, r) + w_j B(j-1, r-1)` and carry its first and second
//! derivatives in β alongside.

use rayon::prelude::*;

use super::pairs::dot;
use crate::matched_data::{MatchedDataset, Stratum};
use crate::numerics::Matrix;
use crate::{Error, Result};

/// Largest stratum the enumeration evaluator accepts.
pub const BRUTEFORCE_MAX_STRATUM: usize = 20;

/// Per-stratum (or summed) log-likelihood, score and information.
#[derive(Debug, Clone, PartialEq)]
pub struct StrataEval {
    pub loglik: f64,
    pub score: Vec<f64>,
    pub info: Matrix,
}

impl StrataEval {
    fn zero(p: usize) -> Self {
        Self {
            loglik: 0.0,
            score: vec![0.0; p],
            info: Matrix::zeros(p, p),
        }
    }

    fn accumulate(&mut self, other: &StrataEval) {
        self.loglik += other.loglik;
        for (a, b) in self.score.iter_mut().zip(&other.score) {
            *a += b;
        }
        let p = self.score.len();
        for i in 0..p {
            for j in 0..p {
                self.info[(i, j)] += other.info[(i, j)];
            }
        }
    }
}

fn check_stratum(s: &Stratum) -> Result<usize> {
    let k = s.case_count();
    if k == 0 || k == s.size() {
        return Err(Error::UninformativeStratum(s.id.clone()));
    }
    Ok(k)
}

fn check_beta(beta: &[f64], dataset: &MatchedDataset) -> Result<()> {
    if beta.len() != dataset.p() {
        return Err(Error::DimensionMismatch {
            expected: dataset.p(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// Checks that every stratum has at least one case and one control.
pub fn validate_strata(dataset: &MatchedDataset) -> Result<()> {
    dataset
        .strata()
        .iter()
        .try_for_each(|s| check_stratum(s).map(|_| ()))
}

/// Evaluates each stratum (possibly in parallel) and sums in stratum order.
fn sum_strata<F>(dataset: &MatchedDataset, eval: F) -> Result<StrataEval>
where
    F: Fn(&Stratum) -> Result<StrataEval> + Sync + Send,
{
    let parts: Vec<StrataEval> = dataset
        .strata()
        .par_iter()
        .map(eval)
        .collect::<Result<_>>()?;
    let mut total = StrataEval::zero(dataset.p());
    for part in &parts {
        total.accumulate(part);
    }
    Ok(total)
}

/// Lexicographic k-subsets of `0..m`.
struct Combinations {
    idx: Vec<usize>,
    m: usize,
    done: bool,
}

impl Combinations {
    fn new(m: usize, k: usize) -> Self {
        Self {
            idx: (0..k).collect(),
            m,
            done: k > m,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.m - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

fn stratum_bruteforce(beta: &[f64], s: &Stratum) -> Result<StrataEval> {
    let k = check_stratum(s)?;
    let m = s.size();
    if m > BRUTEFORCE_MAX_STRATUM {
        return Err(Error::StratumTooLarge {
            id: s.id.clone(),
            size: m,
            limit: BRUTEFORCE_MAX_STRATUM,
        });
    }
    let p = beta.len();
    let eta: Vec<f64> = s.members.iter().map(|o| dot(beta, &o.x)).collect();

    // (Σ_{j∈J} η_j, Σ_{j∈J} x_j) per subset
    let subsets: Vec<(f64, Vec<f64>)> = Combinations::new(m, k)
        .map(|set| {
            let mut sx = vec![0.0; p];
            let mut se = 0.0;
            for &j in &set {
                se += eta[j];
                for (a, v) in sx.iter_mut().zip(&s.members[j].x) {
                    *a += v;
                }
            }
            (se, sx)
        })
        .collect();
    let shift = subsets
        .iter()
        .map(|(e, _)| *e)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = subsets.iter().map(|(e, _)| (e - shift).exp()).collect();
    let total: f64 = weights.iter().sum();
    let log_denominator = shift + total.ln();

    let mut mean = vec![0.0; p];
    for (w, (_, sx)) in weights.iter().zip(&subsets) {
        for (a, v) in mean.iter_mut().zip(sx) {
            *a += w / total * v;
        }
    }
    let mut info = Matrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for (w, (_, sx)) in weights.iter().zip(&subsets) {
        for ((c, v), mu) in centered.iter_mut().zip(sx).zip(&mean) {
            *c = v - mu;
        }
        info.add_outer(&centered, w / total);
    }

    let mut case_sum = vec![0.0; p];
    let mut case_eta = 0.0;
    for (o, e) in s.members.iter().zip(&eta) {
        if o.label.is_case() {
            case_eta += e;
            for (a, v) in case_sum.iter_mut().zip(&o.x) {
                *a += v;
            }
        }
    }
    Ok(StrataEval {
        loglik: case_eta - log_denominator,
        score: case_sum.iter().zip(&mean).map(|(c, mu)| c - mu).collect(),
        info,
    })
}

/// Log-likelihood, score and information by explicit subset enumeration.
/// Strata are capped at [`BRUTEFORCE_MAX_STRATUM`] members.
pub fn strata_eval_bruteforce(beta: &[f64], dataset: &MatchedDataset) -> Result<StrataEval> {
    check_beta(beta, dataset)?;
    sum_strata(dataset, |s| stratum_bruteforce(beta, s))
}

pub fn strata_loglik_bruteforce(beta: &[f64], dataset: &MatchedDataset) -> Result<f64> {
    Ok(strata_eval_bruteforce(beta, dataset)?.loglik)
}

fn stratum_recursive(beta: &[f64], s: &Stratum, with_info: bool) -> Result<StrataEval> {
    let k = check_stratum(s)?;
    let p = beta.len();
    let eta: Vec<f64> = s.members.iter().map(|o| dot(beta, &o.x)).collect();
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // b[r], g[r], h[r]: the degree-r polynomial over the members seen so
    // far (weights scaled by e^{-shift}) and its gradient and Hessian.
    let mut b = vec![0.0; k + 1];
    let mut g = vec![vec![0.0; p]; k + 1];
    let mut h = if with_info {
        vec![Matrix::zeros(p, p); k + 1]
    } else {
        Vec::new()
    };
    b[0] = 1.0;

    for (j, (o, e)) in s.members.iter().zip(&eta).enumerate() {
        let w = (e - shift).exp();
        let x = &o.x;
        for r in (1..=k.min(j + 1)).rev() {
            let (lo, hi) = b.split_at_mut(r);
            let b_prev = lo[r - 1];
            hi[0] += w * b_prev;

            let (g_lo, g_hi) = g.split_at_mut(r);
            let g_prev = &g_lo[r - 1];
            if with_info {
                let (h_lo, h_hi) = h.split_at_mut(r);
                let h_prev = &h_lo[r - 1];
                let h_r = &mut h_hi[0];
                for a in 0..p {
                    for c in 0..p {
                        h_r[(a, c)] += w
                            * (x[a] * x[c] * b_prev
                                + x[a] * g_prev[c]
                                + g_prev[a] * x[c]
                                + h_prev[(a, c)]);
                    }
                }
            }
            for ((gr, xa), gp) in g_hi[0].iter_mut().zip(x).zip(g_prev) {
                *gr += w * (xa * b_prev + gp);
            }
        }
    }

    let denom = b[k];
    let log_denominator = denom.ln() + k as f64 * shift;
    let mean: Vec<f64> = g[k].iter().map(|v| v / denom).collect();

    let mut case_sum = vec![0.0; p];
    let mut case_eta = 0.0;
    for (o, e) in s.members.iter().zip(&eta) {
        if o.label.is_case() {
            case_eta += e;
            for (a, v) in case_sum.iter_mut().zip(&o.x) {
                *a += v;
            }
        }
    }
    let info = if with_info {
        let mut info = h[k].scale(1.0 / denom);
        info.add_outer(&mean, -1.0);
        info
    } else {
        Matrix::zeros(p, p)
    };
    Ok(StrataEval {
        loglik: case_eta - log_denominator,
        score: case_sum.iter().zip(&mean).map(|(c, mu)| c - mu).collect(),
        info,
    })
}

/// Log-likelihood, score and information through the elementary symmetric
/// polynomial recursion; `O(m k p²)` per stratum.
pub fn strata_eval_recursive(beta: &[f64], dataset: &MatchedDataset) -> Result<StrataEval> {
    check_beta(beta, dataset)?;
    sum_strata(dataset, |s| stratum_recursive(beta, s, true))
}

pub fn strata_loglik_recursive(beta: &[f64], dataset: &MatchedDataset) -> Result<f64> {
    check_beta(beta, dataset)?;
    Ok(sum_strata(dataset, |s| stratum_recursive(beta, s, false))?.loglik)
}

pub fn strata_score_recursive(beta: &[f64], dataset: &MatchedDataset) -> Result<Vec<f64>> {
    check_beta(beta, dataset)?;
    Ok(sum_strata(dataset, |s| stratum_recursive(beta, s, false))?.score)
}

pub fn strata_info_recursive(beta: &[f64], dataset: &MatchedDataset) -> Result<Matrix> {
    Ok(strata_eval_recursive(beta, dataset)?.info)
}
