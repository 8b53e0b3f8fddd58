//! Conditional likelihood for 1:1 matched pairs, written in terms of the
//! case-minus-control differences `z_i`:
//!
//! ```text
//! L(β) = -Σ log(1 + exp(-βᵀz_i))
//! s(β) =  Σ z_i / (exp(βᵀz_i) + 1)
//! I(β) =  Σ z_i z_iᵀ exp(βᵀz_i) / (exp(βᵀz_i) + 1)²
//! ```

use crate::classic_tests::{Method, TestResult};
use crate::matched_data::PairedDifferences;
use crate::numerics::{Matrix, SpdFactor};
use crate::{Error, Result};

/// `log(1 + e^{-t})` without overflow.
pub(crate) fn log1p_exp_neg(t: f64) -> f64 {
    (-t).max(0.0) + (-t.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{t})`
pub(crate) fn logistic_neg(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// `e^{t} / (1 + e^{t})²`
fn logistic_var(t: f64) -> f64 {
    let s = logistic_neg(t);
    s * (1.0 - s)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dim(beta: &[f64], z: &PairedDifferences) -> Result<()> {
    if beta.len() != z.p() {
        return Err(Error::DimensionMismatch {
            expected: z.p(),
            found: beta.len(),
        });
    }
    Ok(())
}

pub fn pair_loglik(beta: &[f64], z: &PairedDifferences) -> Result<f64> {
    check_dim(beta, z)?;
    Ok(-z
        .rows()
        .map(|row| log1p_exp_neg(dot(beta, row)))
        .sum::<f64>())
}

pub fn pair_score(beta: &[f64], z: &PairedDifferences) -> Result<Vec<f64>> {
    check_dim(beta, z)?;
    let mut s = vec![0.0; z.p()];
    for row in z.rows() {
        let w = logistic_neg(dot(beta, row));
        for (acc, v) in s.iter_mut().zip(row) {
            *acc += w * v;
        }
    }
    Ok(s)
}

pub fn pair_fisher_info(beta: &[f64], z: &PairedDifferences) -> Result<Matrix> {
    check_dim(beta, z)?;
    let mut info = Matrix::zeros(z.p(), z.p());
    for row in z.rows() {
        info.add_outer(row, logistic_var(dot(beta, row)));
    }
    Ok(info)
}

/// Score statistic for `β = 0`: `n z̄ᵀ Ĩ⁻¹ z̄` with `Ĩ = (1/n) Σ z_i z_iᵀ`.
pub fn score_statistic(z: &PairedDifferences) -> Result<f64> {
    let factor = SpdFactor::new(&z.second_moment()).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SecondMomentSingular,
        other => other,
    })?;
    Ok(z.n() as f64 * factor.quad_form_inv(&z.mean())?)
}

/// CLR score test of `β = 0` on paired differences.
pub fn score_test(z: &PairedDifferences) -> Result<TestResult> {
    let statistic = score_statistic(z)?;
    Ok(
        TestResult::chi_square(Method::ClrScore, statistic, z.p() as u32, z.n())?
            .with_small_sample_warning(z.p()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, finite_diff_jacobian};
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    fn scalars(v: &[f64]) -> PairedDifferences {
        PairedDifferences::from_scalars(v).unwrap()
    }

    #[test]
    fn stable_log1p_exp() {
        assert_eq!(log1p_exp_neg(800.0), 0.0);
        assert!((log1p_exp_neg(-800.0) - 800.0).abs() < 1e-12);
        assert!((log1p_exp_neg(0.0) - 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn loglik_examples() {
        let z = PairedDifferences::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 0.0]])
            .unwrap();
        let ll = pair_loglik(&[0.0, 0.0], &z).unwrap();
        assert!((ll + 3.0 * 2f64.ln()).abs() < 1e-15);

        let single = scalars(&[1.0]);
        let mut prev = f64::NEG_INFINITY;
        for t in [1.0, 10.0, 30.0, 700.0] {
            let ll = pair_loglik(&[t], &single).unwrap();
            assert!(ll < 0.0 || t >= 700.0);
            assert!(ll > prev);
            prev = ll;
        }
        assert!(prev > -1e-300);

        let ll = pair_loglik(&[1.0], &scalars(&[1.0, -1.0])).unwrap();
        let want = -((1.0 + 1.0 / E).ln() + (1.0 + E).ln());
        assert!((ll - want).abs() < 1e-14);
        assert!((ll + 1.62652).abs() < 1e-5);
    }

    #[test]
    fn score_examples() {
        let z = PairedDifferences::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![4.0, 1.0]])
            .unwrap();
        let s = pair_score(&[0.0, 0.0], &z).unwrap();
        let mean = z.mean();
        for j in 0..2 {
            assert!((s[j] - 1.5 * mean[j]).abs() < 1e-14);
        }

        let zeros = PairedDifferences::from_rows(&vec![vec![0.0, 0.0]; 4]).unwrap();
        assert_eq!(pair_score(&[0.7, -2.0], &zeros).unwrap(), vec![0.0, 0.0]);

        let s = pair_score(&[1.0], &scalars(&[1.0, -1.0])).unwrap();
        let want = 1.0 / (E + 1.0) - 1.0 / (1.0 / E + 1.0);
        assert!((s[0] - want).abs() < 1e-15);
        assert!((s[0] + 0.46212).abs() < 1e-5);
    }

    #[test]
    fn information_examples() {
        let z = PairedDifferences::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![4.0, 1.0]])
            .unwrap();
        let info = pair_fisher_info(&[0.0, 0.0], &z).unwrap();
        let quarter = z.second_moment().scale(z.n() as f64 / 4.0);
        assert!(info.max_abs_diff(&quarter) < 1e-14);

        let zeros = PairedDifferences::from_rows(&vec![vec![0.0, 0.0]; 3]).unwrap();
        assert_eq!(
            pair_fisher_info(&[1.0, 1.0], &zeros).unwrap(),
            Matrix::zeros(2, 2)
        );

        let info = pair_fisher_info(&[1.0], &scalars(&[2.0])).unwrap();
        let want = 4.0 * E * E / (E * E + 1.0).powi(2);
        assert!((info[(0, 0)] - want).abs() < 1e-15);
        assert!((info[(0, 0)] - 0.41997).abs() < 1e-5);
    }

    #[test]
    fn score_test_examples() {
        let r = score_test(&scalars(&[1.0, 2.0, 3.0])).unwrap();
        assert!((r.statistic - 18.0 / 7.0).abs() < 1e-14);
        assert_eq!(r.method, Method::ClrScore);
        assert!(r.warning.is_some());

        let r = score_test(&scalars(&[1.0, -1.0])).unwrap();
        assert_eq!(r.statistic, 0.0);

        // b = 10, c = 2, eight concordant pairs
        let mut v = vec![1.0; 10];
        v.extend([-1.0; 2]);
        v.extend([0.0; 8]);
        let r = score_test(&scalars(&v)).unwrap();
        assert!((r.statistic - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn score_test_singular() {
        let z = PairedDifferences::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(
            score_test(&z).unwrap_err().to_string(),
            "second-moment matrix singular"
        );
        assert!(score_test(&scalars(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let z = scalars(&[1.0]);
        assert!(pair_loglik(&[0.0, 0.0], &z).is_err());
        assert!(pair_score(&[], &z).is_err());
        assert!(pair_fisher_info(&[0.0, 1.0], &z).is_err());
    }

    fn arb_problem() -> impl Strategy<Value = (Vec<f64>, PairedDifferences)> {
        (1usize..5, 1usize..50).prop_flat_map(|(p, n)| {
            (
                prop::collection::vec(-1.5f64..1.5, p),
                prop::collection::vec(-3.0f64..3.0, n * p),
            )
                .prop_map(move |(beta, data)| (beta, PairedDifferences::new(n, p, data).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn score_is_gradient((beta, z) in arb_problem()) {
            let s = pair_score(&beta, &z).unwrap();
            let fd = finite_diff_grad(|b| pair_loglik(b, &z).unwrap(), &beta, 1e-5).unwrap();
            let scale = 1.0 + s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in s.iter().zip(&fd) {
                prop_assert!((a - b).abs() < 1e-6 * scale);
            }
        }

        #[test]
        fn information_is_negative_hessian((beta, z) in arb_problem()) {
            let info = pair_fisher_info(&beta, &z).unwrap();
            let jac = finite_diff_jacobian(|b| pair_score(b, &z).unwrap(), &beta, 1e-5).unwrap();
            let scale = 1.0 + info.max_abs();
            for i in 0..z.p() {
                for j in 0..z.p() {
                    prop_assert!((info[(i, j)] + jac[i][j]).abs() < 1e-5 * scale);
                }
            }
            // PSD: vᵀ I v >= 0 for a few directions
            for v in [vec![1.0; z.p()], beta.clone()] {
                let iv = info.mul_vec(&v).unwrap();
                prop_assert!(dot(&v, &iv) >= -1e-12);
            }
        }

        #[test]
        fn loglik_is_concave(
            (b1, z) in arb_problem(),
            shift in prop::collection::vec(-2.0f64..2.0, 4),
            t in 0.01f64..0.99,
        ) {
            let b2: Vec<f64> = b1.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let mix: Vec<f64> = b1.iter().zip(&b2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
            let lhs = pair_loglik(&mix, &z).unwrap();
            let rhs = t * pair_loglik(&b1, &z).unwrap() + (1.0 - t) * pair_loglik(&b2, &z).unwrap();
            prop_assert!(lhs >= rhs - 1e-10);
        }

        #[test]
        fn score_test_sign_invariant((_, z) in arb_problem()) {
            if let Ok(a) = score_statistic(&z) {
                let b = score_statistic(&z.negated()).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }
    }
}
