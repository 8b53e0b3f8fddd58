//! Newton maximization of the conditional likelihood and the Wald and
//! likelihood-ratio tests built on the fit.

use serde::Serialize;

use super::pairs::{pair_fisher_info, pair_loglik, pair_score};
use super::strata::{strata_eval_recursive, strata_loglik_recursive, validate_strata};
use super::Beta;
use crate::classic_tests::{Method, TestResult};
use crate::matched_data::{MatchedDataset, PairedDifferences};
use crate::numerics::{Matrix, SpdFactor};
use crate::{Error, Result};

/// A concave conditional log-likelihood in `β`.
pub trait ConditionalModel {
    fn dim(&self) -> usize;

    /// Number of strata (pairs for the paired model).
    fn strata_count(&self) -> usize;

    fn loglik(&self, beta: &[f64]) -> Result<f64>;

    fn score(&self, beta: &[f64]) -> Result<Vec<f64>>;

    fn information(&self, beta: &[f64]) -> Result<Matrix>;

    /// Upper bound on the norm of within-stratum predictor contrasts; sets
    /// the scale of the separation bound.
    fn contrast_scale(&self) -> f64;
}

impl ConditionalModel for PairedDifferences {
    fn dim(&self) -> usize {
        self.p()
    }

    fn strata_count(&self) -> usize {
        self.n()
    }

    fn loglik(&self, beta: &[f64]) -> Result<f64> {
        pair_loglik(beta, self)
    }

    fn score(&self, beta: &[f64]) -> Result<Vec<f64>> {
        pair_score(beta, self)
    }

    fn information(&self, beta: &[f64]) -> Result<Matrix> {
        pair_fisher_info(beta, self)
    }

    fn contrast_scale(&self) -> f64 {
        self.max_row_norm()
    }
}

/// General-strata conditional likelihood evaluated by the recursion.
#[derive(Debug, Clone, Copy)]
pub struct StrataModel<'a> {
    dataset: &'a MatchedDataset,
}

impl<'a> StrataModel<'a> {
    pub fn new(dataset: &'a MatchedDataset) -> Result<Self> {
        validate_strata(dataset)?;
        Ok(Self { dataset })
    }
}

impl ConditionalModel for StrataModel<'_> {
    fn dim(&self) -> usize {
        self.dataset.p()
    }

    fn strata_count(&self) -> usize {
        self.dataset.strata().len()
    }

    fn loglik(&self, beta: &[f64]) -> Result<f64> {
        strata_loglik_recursive(beta, self.dataset)
    }

    fn score(&self, beta: &[f64]) -> Result<Vec<f64>> {
        Ok(strata_eval_recursive(beta, self.dataset)?.score)
    }

    fn information(&self, beta: &[f64]) -> Result<Matrix> {
        Ok(strata_eval_recursive(beta, self.dataset)?.info)
    }

    // 2 max ‖x - x̄‖ bounds every within-stratum difference.
    fn contrast_scale(&self) -> f64 {
        let p = self.dataset.p();
        let mut scale: f64 = 0.0;
        for s in self.dataset.strata() {
            let m = s.size() as f64;
            let mut mean = vec![0.0; p];
            for o in &s.members {
                for (a, v) in mean.iter_mut().zip(&o.x) {
                    *a += v / m;
                }
            }
            for o in &s.members {
                let d: f64 = o.x.iter().zip(&mean).map(|(v, mu)| (v - mu).powi(2)).sum();
                scale = scale.max(2.0 * d.sqrt());
            }
        }
        scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Sup-norm score tolerance; `None` means `1e-8 · n`.
    pub grad_tol: Option<f64>,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            grad_tol: None,
            max_halvings: 30,
        }
    }
}

pub const SEPARATION_DIAGNOSTIC: &str = "possible separation";

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub beta_hat: Beta,
    /// Observed information `-∇²L` at `beta_hat`.
    pub info_at_hat: Matrix,
    pub loglik: f64,
    /// Log-likelihood at `β = 0`.
    pub null_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub max_grad_norm: f64,
    /// Strata (pairs) used.
    pub n: usize,
    pub diagnostic: Option<String>,
}

/// JSON layout of a fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub beta: Vec<f64>,
    /// `sqrt(diag(I⁻¹))`; `None` when the information is singular.
    pub se: Option<Vec<f64>>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl FitResult {
    pub fn standard_errors(&self) -> Option<Vec<f64>> {
        let factor = SpdFactor::new(&self.info_at_hat).ok()?;
        Some(
            factor
                .inverse()
                .diagonal()
                .into_iter()
                .map(f64::sqrt)
                .collect(),
        )
    }

    pub fn report(&self) -> FitReport {
        FitReport {
            beta: self.beta_hat.to_vec(),
            se: self.standard_errors(),
            loglik: self.loglik,
            iterations: self.iterations,
            converged: self.converged,
            diagnostic: self.diagnostic.clone(),
        }
    }
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton ascent from `β = 0` with step halving.
///
/// Convergence needs both a small score (`‖s‖∞ < grad_tol`) and a small
/// Newton step. Under separation the score decays exponentially while the
/// Newton step stays near one unit, so the first test alone would accept a
/// point on the way to infinity. The run stops with
/// [`SEPARATION_DIAGNOSTIC`] once `‖β‖₂ > 30 / contrast_scale` or after
/// `max_iter` iterations.
pub fn fit_model<M: ConditionalModel + ?Sized>(model: &M, opts: &FitOptions) -> Result<FitResult> {
    let p = model.dim();
    let n = model.strata_count();
    if n == 0 {
        return Err(Error::TooFewPairs {
            needed: 1,
            found: 0,
        });
    }
    let grad_tol = opts.grad_tol.unwrap_or(1e-8 * n as f64);
    let scale = model.contrast_scale();
    let beta_bound = if scale > 0.0 {
        30.0 / scale
    } else {
        f64::INFINITY
    };

    let mut beta = vec![0.0; p];
    let null_loglik = model.loglik(&beta)?;
    let mut loglik = null_loglik;
    let mut iterations = 0;
    let mut diagnostic = None;
    let mut converged = false;

    loop {
        let score = model.score(&beta)?;
        let grad = sup_norm(&score);
        let info = model.information(&beta)?;
        let step = match SpdFactor::new(&info) {
            Ok(f) => Some(f.solve(&score)?),
            Err(Error::NotPositiveDefinite) => None,
            Err(e) => return Err(e),
        };
        let step_small = step
            .as_ref()
            .is_none_or(|d| sup_norm(d) <= 1e-6 * (1.0 + sup_norm(&beta)));
        if grad < grad_tol && step_small {
            converged = true;
            break;
        }
        let Some(step) = step else {
            diagnostic = Some("information matrix singular".to_string());
            break;
        };
        if iterations >= opts.max_iter {
            diagnostic = Some(SEPARATION_DIAGNOSTIC.to_string());
            break;
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, d)| b + t * d).collect();
            let ll = model.loglik(&candidate)?;
            // Allow roundoff-level ties near the optimum.
            if ll.is_finite() && ll >= loglik - 1e-13 * (1.0 + loglik.abs()) {
                accepted = Some((candidate, ll));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        let Some((candidate, ll)) = accepted else {
            if grad < grad_tol {
                converged = true;
            } else {
                diagnostic = Some("line search failed to increase the likelihood".to_string());
            }
            break;
        };
        beta = candidate;
        loglik = ll;
        if euclid(&beta) > beta_bound {
            diagnostic = Some(SEPARATION_DIAGNOSTIC.to_string());
            break;
        }
    }

    let score = model.score(&beta)?;
    Ok(FitResult {
        info_at_hat: model.information(&beta)?,
        max_grad_norm: sup_norm(&score),
        beta_hat: Beta::new(beta),
        loglik,
        null_loglik,
        iterations,
        converged,
        n,
        diagnostic,
    })
}

/// Paired-difference maximum likelihood fit.
pub fn fit_mle(z: &PairedDifferences, opts: &FitOptions) -> Result<FitResult> {
    fit_model(z, opts)
}

/// General-strata maximum likelihood fit.
pub fn fit_strata(dataset: &MatchedDataset, opts: &FitOptions) -> Result<FitResult> {
    fit_model(&StrataModel::new(dataset)?, opts)
}

fn require_converged(fit: &FitResult) -> Result<()> {
    if !fit.converged {
        return Err(Error::MleUnavailable(
            fit.diagnostic
                .clone()
                .unwrap_or_else(|| "fit did not converge".into()),
        ));
    }
    Ok(())
}

/// Wald test of `β = 0`: `β̂ᵀ I(β̂) β̂`.
pub fn wald_test(fit: &FitResult) -> Result<TestResult> {
    require_converged(fit)?;
    let beta = fit.beta_hat.as_slice();
    let ib = fit.info_at_hat.mul_vec(beta)?;
    let statistic: f64 = beta.iter().zip(&ib).map(|(a, b)| a * b).sum();
    let p = beta.len();
    Ok(
        TestResult::chi_square(Method::ClrWald, statistic, p as u32, fit.n)?
            .with_small_sample_warning(p),
    )
}

/// Likelihood-ratio test of `β = 0`: `2 (L(β̂) - L(0))`.
pub fn lr_test<M: ConditionalModel + ?Sized>(fit: &FitResult, model: &M) -> Result<TestResult> {
    require_converged(fit)?;
    let p = model.dim();
    let null = model.loglik(&vec![0.0; p])?;
    let statistic = (2.0 * (fit.loglik - null)).max(0.0);
    Ok(
        TestResult::chi_square(Method::ClrLr, statistic, p as u32, fit.n)?
            .with_small_sample_warning(p),
    )
}

/// Score test of `β = 0` for any conditional model: `s(0)ᵀ I(0)⁻¹ s(0)`.
pub fn score_test_model<M: ConditionalModel + ?Sized>(model: &M) -> Result<TestResult> {
    let p = model.dim();
    let zero = vec![0.0; p];
    let score = model.score(&zero)?;
    let factor = SpdFactor::new(&model.information(&zero)?).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SecondMomentSingular,
        other => other,
    })?;
    let statistic = factor.quad_form_inv(&score)?;
    Ok(
        TestResult::chi_square(Method::ClrScore, statistic, p as u32, model.strata_count())?
            .with_small_sample_warning(p),
    )
}
