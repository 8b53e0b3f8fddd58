//! Parsing of the numeric flag values: δ panels and Σ specifications.

use std::fs;
use std::path::Path;

use matchstat_core::numerics::{Matrix, SpdFactor};

/// Parses `--delta`. Panels are separated by `;`; coordinates within a
/// panel by `,`. When `p == 1` a plain comma list is one panel per value.
pub fn parse_delta_panels(text: &str, p: usize) -> Result<Vec<Vec<f64>>, String> {
    let numbers = |s: &str| -> Result<Vec<f64>, String> {
        s.split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("invalid delta value {t:?}"))
            })
            .collect()
    };
    let panels: Vec<Vec<f64>> = if p == 1 && !text.contains(';') {
        numbers(text)?.into_iter().map(|v| vec![v]).collect()
    } else {
        text.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(numbers)
            .collect::<Result<_, _>>()?
    };
    if panels.is_empty() {
        return Err("--delta needs at least one value".into());
    }
    if let Some(bad) = panels.iter().find(|d| d.len() != p) {
        return Err(format!(
            "delta panel {bad:?} has {} coordinates, expected p = {p}",
            bad.len()
        ));
    }
    Ok(panels)
}

/// Parses `--sigma`: `identity`, `diag:a,b,...`, or a path to a CSV file
/// holding a `p × p` matrix (one row per line). The result is checked to be
/// symmetric positive definite.
pub fn parse_sigma(text: &str, p: usize) -> Result<Matrix, String> {
    let sigma = if text == "identity" {
        Matrix::identity(p)
    } else if let Some(list) = text.strip_prefix("diag:") {
        let diag = list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("invalid diag entry {t:?}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if diag.len() != p {
            return Err(format!("diag has {} entries, expected p = {p}", diag.len()));
        }
        Matrix::from_diagonal(&diag)
    } else {
        read_matrix_csv(Path::new(text))?
    };
    if sigma.rows() != p || sigma.cols() != p {
        return Err(format!(
            "sigma is {}x{}, expected {p}x{p}",
            sigma.rows(),
            sigma.cols()
        ));
    }
    SpdFactor::new(&sigma)
        .map_err(|e| format!("sigma must be symmetric positive definite: {e}"))?;
    Ok(sigma)
}

fn read_matrix_csv(path: &Path) -> Result<Matrix, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read sigma file {}: {e}", path.display()))?;
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            line.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        format!("invalid sigma entry {:?} in {}", t.trim(), path.display())
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Matrix::from_rows(&rows).map_err(|e| format!("sigma file {}: {e}", path.display()))
}

/// File-name tag for a δ panel: coordinates joined by `_`.
pub fn delta_tag(delta: &[f64]) -> String {
    delta
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join("_")
}
