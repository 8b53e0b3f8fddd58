//! Test-only oracles. Nothing here calls into the library's linear algebra
//! or special functions.

#![allow(dead_code)]

use matchstat_core::matched_data::{MatchedDataset, Observation, Stratum};
use matchstat_core::numerics::{GaussianSource, RandomStream};

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    let pivot_row = a[col].clone();
                    for (dst, src) in a[r].iter_mut().zip(&pivot_row) {
                        *dst -= f * src;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `vᵀ M⁻¹ v` through the Gauss–Jordan inverse.
pub fn quad_form_gj(v: &[f64], m: &[Vec<f64>]) -> Option<f64> {
    let inv = gauss_jordan_inverse(m)?;
    Some(
        (0..v.len())
            .map(|i| (0..v.len()).map(|j| v[i] * inv[i][j] * v[j]).sum::<f64>())
            .sum(),
    )
}

/// Column means, unbiased covariance and second moment of `rows`, by the
/// textbook two-pass formulas.
pub fn moments(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = rows.len();
    let p = rows[0].len();
    let mean: Vec<f64> = (0..p)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let cov = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| {
                    rows.iter()
                        .map(|r| (r[a] - mean[a]) * (r[b] - mean[b]))
                        .sum::<f64>()
                        / (n - 1) as f64
                })
                .collect()
        })
        .collect();
    let second = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| rows.iter().map(|r| r[a] * r[b]).sum::<f64>() / n as f64)
                .collect()
        })
        .collect();
    (mean, cov, second)
}

/// Composite Simpson rule with `intervals` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut s = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `erfc(y)` for `y >= 0` by quadrature of the Gaussian kernel.
pub fn erfc_quadrature(y: f64) -> f64 {
    let erf = 2.0 / std::f64::consts::PI.sqrt() * simpson(|t| (-t * t).exp(), 0.0, y, 200_000);
    1.0 - erf
}

/// Chi-square upper tail from the finite closed forms:
/// even `df = 2k`: `e^{-x/2} Σ_{j<k} (x/2)^j / j!`;
/// odd  `df = 2k+1`: `erfc(√(x/2)) + e^{-x/2} Σ_{j<k} (x/2)^{j+1/2} / Γ(j + 3/2)`.
pub fn chi2_sf_oracle(x: f64, df: u32) -> f64 {
    let h = x / 2.0;
    if df.is_multiple_of(2) {
        let k = df / 2;
        let mut term = 1.0;
        let mut sum = 0.0;
        for j in 0..k {
            if j > 0 {
                term *= h / j as f64;
            }
            sum += term;
        }
        (-h).exp() * sum
    } else {
        let k = (df - 1) / 2;
        let mut sum = 0.0;
        // Γ(3/2) = √π / 2
        let mut gamma = std::f64::consts::PI.sqrt() / 2.0;
        for j in 0..k {
            if j > 0 {
                gamma *= j as f64 + 0.5;
            }
            sum += h.powf(j as f64 + 0.5) / gamma;
        }
        erfc_quadrature(h.sqrt()) + (-h).exp() * sum
    }
}

/// `P(F(d1, d2) > x)` for even `d1`, `d2`, by quadrature of the beta
/// kernel `s^{a-1} (1-s)^{b-1}` (a polynomial for even degrees of freedom).
pub fn f_sf_oracle(x: f64, d1: u32, d2: u32) -> f64 {
    let a = d2 as f64 / 2.0;
    let b = d1 as f64 / 2.0;
    let kernel = |s: f64| s.powf(a - 1.0) * (1.0 - s).powf(b - 1.0);
    let t = d2 as f64 / (d2 as f64 + d1 as f64 * x);
    simpson(kernel, 0.0, t, 20_000) / simpson(kernel, 0.0, 1.0, 20_000)
}

/// Deterministic test-data generator.
pub struct Gen(pub RandomStream);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self(RandomStream::new(seed))
    }

    pub fn normal(&mut self) -> f64 {
        self.0.next_std_normal()
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.next_uniform()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn bernoulli(&mut self, prob: f64) -> bool {
        self.uniform() < prob
    }
}

/// `n` random 1:1 pairs with `p` predictors; each predictor column is
/// continuous or binary at random.
pub fn random_pair_dataset(g: &mut Gen, n: usize, p: usize) -> MatchedDataset {
    let binary: Vec<bool> = (0..p).map(|_| g.bernoulli(0.4)).collect();
    let shift: Vec<f64> = (0..p).map(|_| 0.5 * g.normal()).collect();
    let prob: Vec<f64> = (0..p).map(|_| 0.2 + 0.6 * g.uniform()).collect();
    let strata = (0..n)
        .map(|i| {
            let mut draw = |case: bool| -> Vec<f64> {
                (0..p)
                    .map(|j| {
                        if binary[j] {
                            let bump = if case { 0.1 } else { 0.0 };
                            f64::from(u8::from(g.bernoulli(prob[j] + bump)))
                        } else {
                            g.normal() * 1.5 + if case { shift[j] } else { 0.0 }
                        }
                    })
                    .collect()
            };
            let case = Observation::case(draw(true));
            let control = Observation::control(draw(false));
            let members = if g.bernoulli(0.5) {
                vec![case, control]
            } else {
                vec![control, case]
            };
            Stratum::new(format!("p{i}"), members)
        })
        .collect();
    MatchedDataset::new(strata).unwrap()
}

/// `n` random pairs with a binary predictor.
pub fn random_binary_pairs(g: &mut Gen, n: usize) -> MatchedDataset {
    let p_case = 0.1 + 0.8 * g.uniform();
    let p_control = 0.1 + 0.8 * g.uniform();
    let strata = (0..n)
        .map(|i| {
            let case = f64::from(u8::from(g.bernoulli(p_case)));
            let control = f64::from(u8::from(g.bernoulli(p_control)));
            Stratum::new(
                format!("b{i}"),
                vec![
                    Observation::control(vec![control]),
                    Observation::case(vec![case]),
                ],
            )
        })
        .collect();
    MatchedDataset::new(strata).unwrap()
}

/// One stratum of size `m` with `k` cases and `p` Gaussian predictors.
pub fn random_stratum(g: &mut Gen, id: &str, m: usize, k: usize, p: usize, scale: f64) -> Stratum {
    let mut members: Vec<Observation> = (0..m)
        .map(|j| {
            let x = (0..p).map(|_| scale * g.normal()).collect();
            if j < k {
                Observation::case(x)
            } else {
                Observation::control(x)
            }
        })
        .collect();
    // shuffle so cases are not always first
    for i in (1..members.len()).rev() {
        let j = g.int(0, i);
        members.swap(i, j);
    }
    Stratum::new(id, members)
}

/// Sup-norm distance relative to `1 + ‖want‖∞`.
pub fn rel_sup(got: &[f64], want: &[f64]) -> f64 {
    let scale = 1.0 + want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    got.iter()
        .zip(want)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}
