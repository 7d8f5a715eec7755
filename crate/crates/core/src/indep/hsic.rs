//! Hilbert–Schmidt independence criterion with Gaussian kernels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::gamma_ur;

use super::{BandwidthRule, HsicMethod, IndependenceResult, TestConfig, TestMethod};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum sample size for the gamma approximation.
pub const MIN_GAMMA_SAMPLES: usize = 20;

fn sample_size<T>(x: &[&[T]], y: &[&[T]]) -> Result<usize> {
    let n = x
        .first()
        .or(y.first())
        .map(|c| c.len())
        .ok_or(Error::Empty("hsic needs at least one column per block"))?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("hsic needs at least one column per block"));
    }
    for c in x.iter().chain(y) {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    if n < 3 {
        return Err(Error::SampleTooSmall { needed: 3, got: n });
    }
    Ok(n)
}

fn sq_distances<T: Scalar>(cols: &[&[T]], n: usize) -> Vec<T> {
    let mut d2 = vec![T::zero(); n * n];
    for c in cols {
        for i in 0..n {
            let ci = c[i];
            let row = &mut d2[i * n..i * n + i];
            for (j, v) in row.iter_mut().enumerate() {
                let t = ci - c[j];
                *v += t * t;
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

fn median_of_nonzero<T: Scalar>(d2: &[T], n: usize) -> Option<T> {
    let mut v: Vec<T> = (0..n)
        .flat_map(|i| d2[i * n..i * n + i].iter().copied())
        .filter(|&v| v > T::zero())
        .collect();
    if v.is_empty() {
        return None;
    }
    let len = v.len();
    let mid = len / 2;
    let cmp = |a: &T, b: &T| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal);
    let (lower, upper, _) = v.select_nth_unstable_by(mid, cmp);
    let upper = *upper;
    let med = if len % 2 == 1 {
        upper
    } else {
        let lo = lower.iter().copied().fold(T::neg_infinity(), T::max);
        (lo + upper) / T::lit(2.0)
    };
    Some(med.sqrt())
}

/// Median of the nonzero pairwise Euclidean distances between rows of the
/// block, or `None` when every row is identical.
pub fn median_bandwidth<T: Scalar>(block: &[&[T]]) -> Option<T> {
    let n = block.first()?.len();
    median_of_nonzero(&sq_distances(block, n), n)
}

/// Gram matrix, doubly centred, plus what the gamma null needs.
struct CenteredGram<T> {
    n: usize,
    centered: Vec<T>,
    /// Mean of the off-diagonal entries of the uncentred Gram matrix.
    offdiag_mean: T,
}

impl<T: Scalar> CenteredGram<T> {
    fn from_sq_distances(d2: &[T], n: usize, sigma: T) -> Self {
        let scale = -T::one() / (T::lit(2.0) * sigma * sigma);
        let mut k: Vec<T> = d2.iter().map(|&d| (d * scale).exp()).collect();
        let nf = T::lit(n as f64);
        let row_means: Vec<T> = k.chunks_exact(n).map(|r| r.iter().copied().sum::<T>() / nf).collect();
        let grand = row_means.iter().copied().sum::<T>() / nf;
        let total = grand * nf * nf;
        let trace: T = (0..n).map(|i| k[i * n + i]).sum();
        let offdiag_mean = (total - trace) / (nf * (nf - T::one()));
        for i in 0..n {
            let ri = row_means[i];
            for (j, v) in k[i * n..(i + 1) * n].iter_mut().enumerate() {
                *v = *v - ri - row_means[j] + grand;
            }
        }
        CenteredGram {
            n,
            centered: k,
            offdiag_mean,
        }
    }

    /// `trace(K H L H) / n²`.
    fn hsic(&self, other: &Self) -> T {
        let s: T = self
            .centered
            .iter()
            .zip(&other.centered)
            .map(|(&a, &b)| a * b)
            .sum();
        let nf = T::lit(self.n as f64);
        s / (nf * nf)
    }

    /// HSIC against `other` with its rows and columns relabelled by `perm`.
    fn hsic_permuted(&self, other: &Self, perm: &[usize]) -> T {
        let n = self.n;
        let mut s = T::zero();
        for i in 0..n {
            let a = &self.centered[i * n..(i + 1) * n];
            let b = &other.centered[perm[i] * n..(perm[i] + 1) * n];
            for j in 0..n {
                s += a[j] * b[perm[j]];
            }
        }
        let nf = T::lit(n as f64);
        s / (nf * nf)
    }
}

fn gram<T: Scalar>(block: &[&[T]], n: usize, sigma: Option<T>) -> Option<CenteredGram<T>> {
    let d2 = sq_distances(block, n);
    let sigma = match sigma {
        Some(s) => s,
        None => median_of_nonzero(&d2, n)?,
    };
    Some(CenteredGram::from_sq_distances(&d2, n, sigma))
}

fn check_bandwidth<T: Scalar>(bw: T) -> Result<()> {
    if bw > T::zero() && bw.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bw}")))
    }
}

/// Biased HSIC estimate `trace(K H L H) / n²` with Gaussian kernels
/// `exp(-‖a-b‖² / (2σ²))`.
pub fn hsic_statistic<T: Scalar>(x: &[&[T]], y: &[&[T]], bw_x: T, bw_y: T) -> Result<T> {
    let n = sample_size(x, y)?;
    check_bandwidth(bw_x)?;
    check_bandwidth(bw_y)?;
    let k = CenteredGram::from_sq_distances(&sq_distances(x, n), n, bw_x);
    let l = CenteredGram::from_sq_distances(&sq_distances(y, n), n, bw_y);
    Ok(k.hsic(&l))
}

fn gamma_result<T: Scalar>(k: &CenteredGram<T>, l: &CenteredGram<T>) -> IndependenceResult<T> {
    let n = k.n;
    let nf = n as f64;
    let stat = k.hsic(l);
    let test_stat = stat.as_f64() * nf;

    let mut var_sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (k.centered[i * n + j] * l.centered[i * n + j]).as_f64() / 6.0;
                var_sum += v * v;
            }
        }
    }
    let var = 72.0 * (nf - 4.0) * (nf - 5.0) / (nf * (nf - 1.0) * (nf - 2.0) * (nf - 3.0))
        * var_sum
        / (nf * (nf - 1.0));
    let mu_x = k.offdiag_mean.as_f64();
    let mu_y = l.offdiag_mean.as_f64();
    let mean = (1.0 + mu_x * mu_y - mu_x - mu_y) / nf;

    let p_value = if var > 0.0 && mean > 0.0 && test_stat.is_finite() {
        let shape = mean * mean / var;
        let scale = var * nf / mean;
        let x = (test_stat / scale).max(0.0);
        gamma_ur(shape, x).clamp(0.0, 1.0)
    } else {
        1.0
    };
    IndependenceResult {
        statistic: stat.max(T::zero()),
        p_value,
        method: TestMethod::HsicGamma,
        sample_size: n,
        infinite_statistic: false,
    }
}

/// HSIC test with a moment-matched gamma null for `n · HSIC`.
///
/// `None` bandwidths use the median heuristic. A constant block gives
/// statistic 0 and `p = 1`.
pub fn hsic_pvalue_gamma<T: Scalar>(
    x: &[&[T]],
    y: &[&[T]],
    bw_x: Option<T>,
    bw_y: Option<T>,
) -> Result<IndependenceResult<T>> {
    let n = sample_size(x, y)?;
    if n < MIN_GAMMA_SAMPLES {
        return Err(Error::SampleTooSmall {
            needed: MIN_GAMMA_SAMPLES,
            got: n,
        });
    }
    bw_x.map(check_bandwidth).transpose()?;
    bw_y.map(check_bandwidth).transpose()?;
    let (Some(k), Some(l)) = (gram(x, n, bw_x), gram(y, n, bw_y)) else {
        return Ok(IndependenceResult::trivial(TestMethod::HsicGamma, n));
    };
    Ok(gamma_result(&k, &l))
}

/// HSIC test with a permutation null of `permutations` draws.
///
/// Permutation `b` is drawn from a ChaCha stream keyed by `(seed, b)`, so the
/// result does not depend on how the loop is scheduled.
pub fn hsic_pvalue_permutation<T: Scalar>(
    x: &[&[T]],
    y: &[&[T]],
    bw_x: Option<T>,
    bw_y: Option<T>,
    permutations: usize,
    seed: u64,
) -> Result<IndependenceResult<T>> {
    let n = sample_size(x, y)?;
    if permutations < 100 {
        return Err(Error::InvalidArgument(format!(
            "permutation test needs at least 100 permutations, got {permutations}"
        )));
    }
    bw_x.map(check_bandwidth).transpose()?;
    bw_y.map(check_bandwidth).transpose()?;
    let (Some(k), Some(l)) = (gram(x, n, bw_x), gram(y, n, bw_y)) else {
        return Ok(IndependenceResult::trivial(TestMethod::HsicPermutation, n));
    };
    let observed = k.hsic(&l);
    let exceed: usize = (0..permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            usize::from(k.hsic_permuted(&l, &perm) >= observed)
        })
        .sum();
    Ok(IndependenceResult {
        statistic: observed.max(T::zero()),
        p_value: (1 + exceed) as f64 / (permutations + 1) as f64,
        method: TestMethod::HsicPermutation,
        sample_size: n,
        infinite_statistic: false,
    })
}

/// HSIC test configured by `config` (method, bandwidth rule, permutations, seed).
pub fn hsic_test<T: Scalar>(
    x: &[&[T]],
    y: &[&[T]],
    config: &TestConfig,
) -> Result<IndependenceResult<T>> {
    let bw = match config.bandwidth {
        BandwidthRule::MedianHeuristic => None,
        BandwidthRule::Fixed(v) => Some(T::lit(v)),
    };
    match config.hsic_method {
        HsicMethod::Gamma => hsic_pvalue_gamma(x, y, bw, bw),
        HsicMethod::Permutation => {
            hsic_pvalue_permutation(x, y, bw, bw, config.permutations, config.seed)
        }
    }
}
