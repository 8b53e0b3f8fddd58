mod common;

use common::{chi2_sf_oracle, f_sf_oracle, gauss_jordan_inverse, quad_form_gj, Gen};
use matchstat_core::numerics::{chi2_sf, f_sf, quad_form_inv, spd_factor, Matrix};

#[test]
fn oracle_closed_forms_sanity() {
    // df = 2 reduces to exp(-x/2); df = 1 at x = 0 is the full tail
    for x in [0.0, 0.5, 3.0, 11.0] {
        assert!((chi2_sf_oracle(x, 2) - (-x / 2.0f64).exp()).abs() < 1e-15);
    }
    assert!((chi2_sf_oracle(0.0, 1) - 1.0).abs() < 1e-15);
    assert!((chi2_sf_oracle(0.0, 5) - 1.0).abs() < 1e-14);
}

#[test]
fn chi2_sf_matches_oracle_on_grid() {
    for df in 1..=12 {
        for i in 0..=60 {
            let x = i as f64 * 0.5;
            let got = chi2_sf(x, df).unwrap();
            let want = chi2_sf_oracle(x, df);
            assert!(
                (got - want).abs() < 1e-10,
                "df {df}, x {x}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn chi2_critical_values() {
    let p1 = chi2_sf(3.841459, 1).unwrap();
    let p2 = chi2_sf(5.991465, 2).unwrap();
    assert!((p1 - 0.05).abs() < 1e-4);
    assert!((p2 - 0.05).abs() < 1e-4);
    assert!((p1 - chi2_sf_oracle(3.841459, 1)).abs() < 1e-10);
    assert!((p2 - chi2_sf_oracle(5.991465, 2)).abs() < 1e-10);
}

#[test]
fn f_sf_matches_oracle() {
    for (d1, d2) in [(2, 2), (2, 10), (4, 6), (6, 20), (8, 4)] {
        for x in [0.1, 0.5, 1.0, 2.0, 4.0, 9.0] {
            let got = f_sf(x, d1, d2).unwrap();
            let want = f_sf_oracle(x, d1, d2);
            assert!(
                (got - want).abs() < 1e-9,
                "F({d1},{d2}) at {x}: {got} vs {want}"
            );
        }
    }
    let v = f_sf(4.0, 2, 10).unwrap();
    assert!((v - 0.0526).abs() < 5e-4);
}

#[test]
fn quad_form_matches_gauss_jordan() {
    let mut g = Gen::new(2024);
    for _ in 0..300 {
        let p = g.int(1, 6);
        let a: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..p).map(|_| g.normal()).collect())
            .collect();
        // M = A Aᵀ + p I
        let m: Vec<Vec<f64>> = (0..p)
            .map(|i| {
                (0..p)
                    .map(|j| {
                        (0..p).map(|k| a[i][k] * a[j][k]).sum::<f64>()
                            + if i == j { p as f64 } else { 0.0 }
                    })
                    .collect()
            })
            .collect();
        let v: Vec<f64> = (0..p).map(|_| 3.0 * g.normal()).collect();
        let factor = spd_factor(&Matrix::from_rows(&m).unwrap()).unwrap();
        let got = quad_form_inv(&v, &factor).unwrap();
        let want = quad_form_gj(&v, &m).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");

        // factor reproduces M
        let rebuilt = factor.reconstruct();
        let mm = Matrix::from_rows(&m).unwrap();
        assert!(rebuilt.max_abs_diff(&mm) < 1e-10 * (1.0 + mm.max_abs()));
        let l = factor.lower();
        for i in 0..p {
            assert!(l[(i, i)] > 0.0);
            for j in i + 1..p {
                assert_eq!(l[(i, j)], 0.0);
            }
        }

        let inv = factor.inverse();
        let gj = gauss_jordan_inverse(&m).unwrap();
        for i in 0..p {
            for j in 0..p {
                assert!((inv[(i, j)] - gj[i][j]).abs() < 1e-10);
            }
        }
    }
}
