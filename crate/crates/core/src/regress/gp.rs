//! Gaussian-process regression with a squared-exponential kernel.
//!
//! Inputs are standardised per column and the response is standardised
//! before fitting. Three hyperparameters (one shared length-scale, signal
//! variance, noise variance) are chosen by maximising the log marginal
//! likelihood with BFGS in log-space from a fixed list of starting points.
//! Residuals are `y - E[f(x) | data]` at the training inputs, reported on the
//! original response scale.

use serde::{Deserialize, Serialize};

use super::{FitDiagnostics, FitResult};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Minimum sample size accepted by [`fit_gp`].
pub const MIN_GP_SAMPLES: usize = 20;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GpConfig {
    /// Number of optimiser starts.
    pub starts: usize,
    /// BFGS iteration cap per start.
    pub max_iter: usize,
    /// Rows used while optimising hyperparameters. The final posterior mean
    /// always uses every row.
    pub optimization_rows: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        GpConfig {
            starts: 5,
            max_iter: 200,
            optimization_rows: 100,
        }
    }
}

/// Optimum found, in standardised units.
#[derive(Clone, Debug, PartialEq)]
pub struct GpDiagnostics<T> {
    pub log_marginal_likelihood: T,
    pub length_scale: T,
    pub signal_variance: T,
    pub noise_variance: T,
    pub jitter: T,
    pub starts_succeeded: usize,
}

// Box constraints on log-hyperparameters (standardised units).
const LOG_BOUNDS: [(f64, f64); 3] = [
    (-3.5, 4.0),   // length-scale ~ [0.03, 55]
    (-7.0, 4.6),   // signal variance ~ [1e-3, 100]
    (-11.5, 0.7),  // noise variance ~ [1e-5, 2]
];

// (length-scale multiplier of the median distance, signal var, noise var)
const START_TABLE: [(f64, f64, f64); 5] = [
    (1.0, 1.0, 0.1),
    (0.3, 1.0, 0.01),
    (3.0, 1.0, 0.3),
    (0.1, 1.0, 0.05),
    (1.0, 0.3, 0.5),
];

const BASE_JITTER: f64 = 1e-8;
const MAX_JITTER: f64 = 1e-2;

pub fn fit_gp<T: Scalar>(x: &[&[T]], y: &[T], config: &GpConfig) -> Result<FitResult<T>> {
    let n = y.len();
    if x.is_empty() {
        return Err(Error::InvalidArgument("gaussian process needs at least one input".into()));
    }
    if n < MIN_GP_SAMPLES {
        return Err(Error::SampleTooSmall {
            needed: MIN_GP_SAMPLES,
            got: n,
        });
    }
    if config.starts == 0 || config.max_iter == 0 {
        return Err(Error::InvalidArgument("gp starts and max_iter must be positive".into()));
    }
    for c in x {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    if y.iter().chain(x.iter().flat_map(|c| c.iter())).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gaussian process input"));
    }

    let y_mean = linalg::mean(y);
    let yc: Vec<T> = y.iter().map(|&v| v - y_mean).collect();
    let y_sd = (linalg::dot(&yc, &yc) / T::lit(n as f64)).sqrt();
    if !(y_sd > T::epsilon() * (T::one() + y_mean.abs())) {
        // Constant response: the posterior mean reproduces it exactly.
        return Ok(FitResult::from_residuals(vec![T::zero(); n]));
    }
    let ys: Vec<T> = yc.iter().map(|&v| v / y_sd).collect();
    let xs = standardise(x);

    // Hyperparameter search on an evenly spaced subset of rows.
    let m = config.optimization_rows.clamp(MIN_GP_SAMPLES, n);
    let rows: Vec<usize> = (0..m).map(|k| k * n / m).collect();
    let sub_x: Vec<Vec<T>> = xs.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect();
    let sub_y: Vec<T> = rows.iter().map(|&r| ys[r]).collect();
    let sub_d2 = sq_distances(&sub_x, m);
    let median = median_distance(&sub_d2, m).unwrap_or(1.0);

    let mut best: Option<(T, [f64; 3])> = None;
    let mut succeeded = 0;
    let mut last_err = String::new();
    for k in 0..config.starts {
        let (ls, sf, sn) = START_TABLE[k % START_TABLE.len()];
        let widen = 2f64.powi((k / START_TABLE.len()) as i32);
        let theta0 = clamp([(ls * median * widen).ln(), sf.ln(), sn.ln()]);
        match maximise(&sub_d2, &sub_y, m, theta0, config.max_iter) {
            Ok((f, theta)) => {
                succeeded += 1;
                if best.map_or(true, |(bf, _)| f > bf) {
                    best = Some((f, theta));
                }
            }
            Err(e) => last_err = e.to_string(),
        }
    }
    let (_, theta) = best.ok_or(Error::GpOptimization(last_err))?;

    // Posterior mean on all rows with the selected hyperparameters.
    let d2 = sq_distances(&xs, n);
    let eval = evaluate(&d2, &ys, n, theta, false)?;
    let noise = T::lit(theta[2].exp()) + eval.jitter;
    let residuals: Vec<T> = eval.alpha.iter().map(|&a| noise * a * y_sd).collect();
    let rss = linalg::dot(&residuals, &residuals);
    Ok(FitResult {
        residuals,
        diagnostics: FitDiagnostics {
            rss,
            coefficients: None,
            gp: Some(GpDiagnostics {
                log_marginal_likelihood: eval.log_ml,
                length_scale: T::lit(theta[0].exp()),
                signal_variance: T::lit(theta[1].exp()),
                noise_variance: T::lit(theta[2].exp()),
                jitter: eval.jitter,
                starts_succeeded: succeeded,
            }),
        },
    })
}

fn standardise<T: Scalar>(x: &[&[T]]) -> Vec<Vec<T>> {
    x.iter()
        .map(|c| {
            let m = linalg::mean(c);
            let ss: T = c.iter().map(|&a| (a - m) * (a - m)).sum();
            let sd = (ss / T::lit(c.len() as f64)).sqrt();
            let s = if sd > T::zero() { T::one() / sd } else { T::zero() };
            c.iter().map(|&a| (a - m) * s).collect()
        })
        .collect()
}

fn sq_distances<T: Scalar>(cols: &[Vec<T>], n: usize) -> Vec<T> {
    let mut d2 = vec![T::zero(); n * n];
    for c in cols {
        for i in 0..n {
            let ci = c[i];
            for j in 0..i {
                let t = ci - c[j];
                d2[i * n + j] += t * t;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            d2[j * n + i] = d2[i * n + j];
        }
    }
    d2
}

fn median_distance<T: Scalar>(d2: &[T], n: usize) -> Option<f64> {
    let mut v: Vec<f64> = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| d2[i * n + j].as_f64())
        .filter(|&v| v > 0.0)
        .collect();
    if v.is_empty() {
        return None;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    Some(m.sqrt())
}

fn clamp(mut theta: [f64; 3]) -> [f64; 3] {
    for (t, (lo, hi)) in theta.iter_mut().zip(LOG_BOUNDS) {
        *t = t.clamp(lo, hi);
    }
    theta
}

struct Evaluation<T> {
    log_ml: T,
    grad: [f64; 3],
    alpha: Vec<T>,
    jitter: T,
}

/// Log marginal likelihood at log-hyperparameters `theta`, optionally with
/// its gradient.
fn evaluate<T: Scalar>(
    d2: &[T],
    y: &[T],
    n: usize,
    theta: [f64; 3],
    with_grad: bool,
) -> Result<Evaluation<T>> {
    let ls2 = T::lit((2.0 * theta[0]).exp());
    let sf2 = T::lit(theta[1].exp());
    let sn2 = T::lit(theta[2].exp());
    let inv = -T::lit(0.5) / ls2;
    let r: Vec<T> = d2.iter().map(|&d| (d * inv).exp()).collect();
    let mut k: Vec<T> = r.iter().map(|&v| sf2 * v).collect();
    for i in 0..n {
        k[i * n + i] += sn2;
    }
    let (l, jitter) = linalg::cholesky_with_jitter(
        &k,
        n,
        T::lit(BASE_JITTER) * sf2,
        T::lit(MAX_JITTER) * sf2.max(T::one()),
    )?;
    let alpha = linalg::cholesky_solve(&l, n, y);
    let log_det: T = (0..n).map(|i| l[i * n + i].ln()).sum();
    let log_ml = -T::lit(0.5) * linalg::dot(y, &alpha)
        - log_det
        - T::lit(0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln());
    let mut grad = [0.0; 3];
    if with_grad {
        let kinv = linalg::cholesky_inverse(&l, n);
        let mut g_ls = T::zero();
        let mut g_sf = T::zero();
        let mut tr = T::zero();
        for i in 0..n {
            let ai = alpha[i];
            let row = i * n;
            for j in 0..n {
                let w = ai * alpha[j] - kinv[row + j];
                let kr = sf2 * r[row + j];
                g_sf += w * kr;
                g_ls += w * kr * d2[row + j];
            }
            tr += ai * ai - kinv[row + i];
        }
        let half = T::lit(0.5);
        grad = [
            (half * g_ls / ls2).as_f64(),
            (half * g_sf).as_f64(),
            (half * sn2 * tr).as_f64(),
        ];
    }
    Ok(Evaluation {
        log_ml,
        grad,
        alpha,
        jitter,
    })
}

/// Projected BFGS ascent in log-hyperparameter space.
fn maximise<T: Scalar>(
    d2: &[T],
    y: &[T],
    n: usize,
    theta0: [f64; 3],
    max_iter: usize,
) -> Result<(T, [f64; 3])> {
    let mut theta = theta0;
    let mut cur = evaluate(d2, y, n, theta, true)?;
    if !cur.log_ml.is_finite() {
        return Err(Error::GpOptimization("non-finite likelihood at start".into()));
    }
    // Inverse Hessian approximation of the negated objective.
    let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut h = identity;
    for _ in 0..max_iter {
        let g = cur.grad;
        let mut dir: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| h[i][j] * g[j]).sum());
        let slope: f64 = (0..3).map(|i| dir[i] * g[i]).sum();
        if !(slope > 0.0) {
            // Not an ascent direction: restart from steepest ascent.
            dir = g;
            h = identity;
        }
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 2.0 {
            for v in dir.iter_mut() {
                *v *= 2.0 / norm;
            }
        }
        let mut step = 1.0;
        let mut accepted = None;
        let f0 = cur.log_ml.as_f64();
        for _ in 0..30 {
            let cand = clamp(std::array::from_fn(|i| theta[i] + step * dir[i]));
            let moved: f64 = (0..3).map(|i| (cand[i] - theta[i]) * g[i]).sum();
            if let Ok(e) = evaluate(d2, y, n, cand, true) {
                let f = e.log_ml.as_f64();
                if f.is_finite() && f >= f0 + 1e-4 * moved {
                    accepted = Some((cand, e));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((next, e)) = accepted else { break };
        let s: [f64; 3] = std::array::from_fn(|i| next[i] - theta[i]);
        // Gradient of the negated objective changes by -(g_new - g_old).
        let yv: [f64; 3] = std::array::from_fn(|i| cur.grad[i] - e.grad[i]);
        let improvement = e.log_ml.as_f64() - f0;
        theta = next;
        cur = e;
        let sy: f64 = (0..3).map(|i| s[i] * yv[i]).sum();
        if sy > 1e-12 {
            let hy: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| h[i][j] * yv[j]).sum());
            let yhy: f64 = (0..3).map(|i| yv[i] * hy[i]).sum();
            let rho = 1.0 / sy;
            for i in 0..3 {
                for j in 0..3 {
                    h[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j]
                        - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        let f = cur.log_ml.as_f64();
        if projected_gradient_norm(theta, cur.grad) < 1e-5 * (1.0 + n as f64).sqrt()
            || improvement.abs() < 1e-9 * (1.0 + f.abs())
        {
            break;
        }
    }
    Ok((cur.log_ml, theta))
}

fn projected_gradient_norm(theta: [f64; 3], g: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        let (lo, hi) = LOG_BOUNDS[i];
        let blocked = (theta[i] <= lo && g[i] < 0.0) || (theta[i] >= hi && g[i] > 0.0);
        if !blocked {
            s += g[i] * g[i];
        }
    }
    s.sqrt()
}
