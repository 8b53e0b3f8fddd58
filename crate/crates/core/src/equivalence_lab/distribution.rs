use std::io::Write;

use serde::Serialize;

use crate::{Error, Result};

fn sorted_finite(a: &[f64]) -> Result<Vec<f64>> {
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("sample contains NaN".into()));
    }
    let mut v = a.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Two-sample Kolmogorov–Smirnov distance `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted_finite(a)?;
    let b = sorted_finite(b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Linear-interpolation quantile (R type 7) of an ascending sample.
pub fn quantile(sorted: &[f64], level: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * level.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramData {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// `count / (total · width)`, so the densities integrate to the
    /// fraction of samples inside the range.
    pub densities: Vec<f64>,
    pub total: usize,
}

impl HistogramData {
    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "bin_left,bin_right,count,density")?;
        for (i, (count, density)) in self.counts.iter().zip(&self.densities).enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                self.edges[i],
                self.edges[i + 1],
                count,
                density
            )?;
        }
        Ok(())
    }
}

/// Equal-width histogram over `range`, or over `[min, max]` of the samples
/// when `range` is `None`. The last bin is closed on the right.
pub fn histogram(samples: &[f64], bins: usize, range: Option<(f64, f64)>) -> Result<HistogramData> {
    if bins == 0 {
        return Err(Error::InvalidArgument("bin count must be >= 1".into()));
    }
    let (lo, hi) = match range {
        Some(r) => r,
        None => {
            let s = sorted_finite(samples)?;
            (s[0], s[s.len() - 1])
        }
    };
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonFinite("histogram range".into()));
    }
    if hi <= lo {
        return Err(Error::ZeroWidthRange);
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + i as f64 * width })
        .collect();
    let mut counts = vec![0u64; bins];
    for &x in samples {
        if !(lo..=hi).contains(&x) {
            continue;
        }
        let idx = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let total = samples.len();
    let densities = counts
        .iter()
        .map(|&c| c as f64 / (total as f64 * width))
        .collect();
    Ok(HistogramData {
        edges,
        counts,
        densities,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_examples() {
        let a = [0.3, -1.0, 2.0, 2.0];
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0], &[1.0]).unwrap(), 1.0);
        let d = ks_statistic(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(ks_statistic(&[], &[1.0]), Err(Error::EmptySample)));
    }

    #[test]
    fn ks_handles_ties_across_samples() {
        // F_a jumps to 1 at 0; F_b is 1/2 at 0
        let d = ks_statistic(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_is_symmetric() {
        let a = [0.1, 0.5, 0.9, 1.3];
        let b = [0.0, 0.6, 0.7];
        assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&b, &a).unwrap());
    }

    #[test]
    fn quantile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        assert!((quantile(&s, 0.5) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn constant_samples_land_in_one_bin() {
        let h = histogram(&[0.0; 100], 4, Some((-1.0, 1.0))).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts.iter().sum::<u64>(), 100);
    }

    #[test]
    fn densities_integrate_to_in_range_fraction() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin()).collect();
        let h = histogram(&samples, 17, None).unwrap();
        let integral: f64 = h.densities.iter().map(|d| d * h.bin_width()).sum();
        assert!((integral - 1.0).abs() < 1e-12);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);

        let h = histogram(&samples, 10, Some((0.0, 0.5))).unwrap();
        let inside = samples
            .iter()
            .filter(|&&x| (0.0..=0.5).contains(&x))
            .count();
        let integral: f64 = h.densities.iter().map(|d| d * h.bin_width()).sum();
        assert_eq!(h.counts.iter().sum::<u64>() as usize, inside);
        assert!((integral - inside as f64 / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn zero_width_range() {
        assert!(matches!(
            histogram(&[2.0; 5], 3, None),
            Err(Error::ZeroWidthRange)
        ));
        assert!(histogram(&[1.0], 0, Some((0.0, 1.0))).is_err());
    }

    #[test]
    fn csv_layout() {
        let h = histogram(&[0.0, 0.5, 1.0], 2, Some((0.0, 1.0))).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "bin_left,bin_right,count,density");
        assert_eq!(lines[1], "0,0.5,1,0.6666666666666666");
        assert_eq!(lines[2], "0.5,1,2,1.3333333333333333");
    }
}
