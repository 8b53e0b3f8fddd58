//! Central finite differences.

use crate::{Error, Result};

/// `(f(x0 + h e_j) - f(x0 - h e_j)) / 2h` for each coordinate `j`.
pub fn finite_diff_grad<F>(f: F, x0: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    let mut grad = Vec::with_capacity(x0.len());
    for j in 0..x0.len() {
        x[j] = x0[j] + h;
        let up = f(&x);
        x[j] = x0[j] - h;
        let down = f(&x);
        x[j] = x0[j];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "function evaluation near coordinate {j}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Central-difference Jacobian; row `i` holds the derivatives of output `i`.
pub fn finite_diff_jacobian<F>(f: F, x0: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    let mut columns = Vec::with_capacity(x0.len());
    for j in 0..x0.len() {
        x[j] = x0[j] + h;
        let up = f(&x);
        x[j] = x0[j] - h;
        let down = f(&x);
        x[j] = x0[j];
        if up.len() != down.len() {
            return Err(Error::DimensionMismatch {
                expected: up.len(),
                found: down.len(),
            });
        }
        if up.iter().chain(&down).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "function evaluation near coordinate {j}"
            )));
        }
        columns.push(
            up.iter()
                .zip(&down)
                .map(|(u, d)| (u - d) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let outputs = columns.first().map_or(0, Vec::len);
    Ok((0..outputs)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect())
}
