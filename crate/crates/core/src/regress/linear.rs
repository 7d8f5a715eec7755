use super::{FitDiagnostics, FitResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Least-squares fit of `y` on the columns of `x` plus an intercept.
pub fn fit_linear<T: Scalar>(x: &[&[T]], y: &[T]) -> Result<FitResult<T>> {
    let n = y.len();
    let k = x.len();
    if n < k + 2 {
        return Err(Error::SampleTooSmall { needed: k + 2, got: n });
    }
    if y.iter().chain(x.iter().flat_map(|c| c.iter())).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression input"));
    }
    let (slopes, intercept, residuals) = linalg::least_squares_with_intercept(x, y)?;
    let rss = linalg::dot(&residuals, &residuals);
    Ok(FitResult {
        residuals,
        diagnostics: FitDiagnostics {
            rss,
            coefficients: Some((slopes, intercept)),
            gp: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_line_has_zero_residuals() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let fit = fit_linear(&[&x], &y).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
        let (b, a) = fit.diagnostics.coefficients.unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_regressors_subtracts_mean() {
        let fit = fit_linear::<f64>(&[], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fit.residuals, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn matches_grid_search_oracle() {
        let x = [0.0, 1.0, 2.0];
        let y = [0.0, 1.0, 3.0];
        // Brute-force grid over (slope, intercept) at resolution 1e-3.
        let rss = |b: f64, a: f64| -> f64 {
            x.iter().zip(&y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for bi in 0..=3000 {
            let b = bi as f64 * 1e-3;
            for ai in -1000..=1000 {
                let a = ai as f64 * 1e-3;
                let r = rss(b, a);
                if r < best.0 {
                    best = (r, b, a);
                }
            }
        }
        // Oracle lands on slope 1.5, intercept -1/6 (rounded to the grid).
        let fit = fit_linear(&[&x], &y).unwrap();
        for (i, r) in fit.residuals.iter().enumerate() {
            let oracle = y[i] - best.2 - best.1 * x[i];
            assert!((r - oracle).abs() < 2e-3, "{r} vs {oracle}");
        }
        assert!((fit.diagnostics.rss - best.0).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        let x = [1.0, 2.0];
        assert!(matches!(
            fit_linear(&[&x], &[1.0, 2.0]),
            Err(Error::SampleTooSmall { .. })
        ));
        let c = [1.0; 5];
        assert!(matches!(
            fit_linear(&[&c], &[1.0, 2.0, 3.0, 4.0, 5.0]),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let x: Vec<f32> = (0..20).map(|i| i as f32 * 0.1).collect();
        let y: Vec<f32> = x.iter().map(|v| 3.0 * v - 0.5).collect();
        let fit = fit_linear(&[&x], &y).unwrap();
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-4));
    }

    proptest! {
        #[test]
        fn residuals_are_orthogonal_and_sum_to_zero(
            rows in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 8..60),
            shift in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let y: Vec<f64> = rows.iter().map(|r| r.2 + 0.3 * r.0 * r.0).collect();
            let fit = match fit_linear(&[&a, &b], &y) {
                Ok(f) => f,
                Err(Error::RankDeficient) => return Ok(()),
                Err(e) => panic!("{e}"),
            };
            let n = y.len() as f64;
            let sum: f64 = fit.residuals.iter().sum();
            prop_assert!(sum.abs() <= 1e-8 * n);
            let rnorm = linalg::dot(&fit.residuals, &fit.residuals).sqrt();
            for col in [&a, &b] {
                let cnorm = linalg::dot(col, col).sqrt();
                let ip = linalg::dot(col, &fit.residuals);
                prop_assert!(ip.abs() <= 1e-6 * (cnorm * rnorm).max(1e-12));
            }
            let shifted: Vec<f64> = y.iter().map(|v| v + shift).collect();
            let fit2 = fit_linear(&[&a, &b], &shifted).unwrap();
            for (r1, r2) in fit.residuals.iter().zip(&fit2.residuals) {
                prop_assert!((r1 - r2).abs() <= 1e-9);
            }
        }
    }
}
