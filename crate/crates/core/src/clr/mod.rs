//! Conditional logistic regression.
//!
//! The paired functions work on case-minus-control differences; the
//! `strata_*` functions handle strata with any number of cases and controls.
//! All estimation is conditional on the per-stratum case counts, so no
//! stratum intercepts are ever estimated.

mod fit;
mod pairs;
mod strata;

use std::ops::Deref;

pub use fit::{
    fit_mle, fit_model, fit_strata, lr_test, score_test_model, wald_test, ConditionalModel,
    FitOptions, FitReport, FitResult, StrataModel, SEPARATION_DIAGNOSTIC,
};
pub use pairs::{pair_fisher_info, pair_loglik, pair_score, score_statistic, score_test};
pub use strata::{
    strata_eval_bruteforce, strata_eval_recursive, strata_info_recursive, strata_loglik_bruteforce,
    strata_loglik_recursive, strata_score_recursive, validate_strata, StrataEval,
    BRUTEFORCE_MAX_STRATUM,
};

/// Log-odds-ratio coefficients, one per predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct Beta(Vec<f64>);

impl Beta {
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self(coefficients)
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Beta {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Beta {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
