//! Partial correlation with the Fisher z-transform.

use statrs::function::erf::erfc;

use super::{IndependenceResult, TestMethod};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::linalg;
use crate::regress::fit_linear;
use crate::scalar::Scalar;

fn check_args<T: Scalar>(data: &Dataset<T>, i: usize, j: usize, s: NodeSet) -> Result<()> {
    let d = data.num_vars();
    for v in [i, j].into_iter().chain(s.highest()) {
        if v >= d {
            return Err(Error::InvalidNode { index: v, num_nodes: d });
        }
    }
    if i == j || s.contains(i) || s.contains(j) {
        return Err(Error::OverlappingSets);
    }
    Ok(())
}

/// Correlation between the residuals of `i` and of `j` after OLS on `s`.
///
/// Returns 0 when either residual vector vanishes.
pub fn partial_correlation<T: Scalar>(data: &Dataset<T>, i: usize, j: usize, s: NodeSet) -> Result<T> {
    check_args(data, i, j, s)?;
    let block = data.block(s);
    let ri = fit_linear(&block, data.column(i))?.residuals;
    let rj = fit_linear(&block, data.column(j))?.residuals;
    let (sii, sjj) = (linalg::dot(&ri, &ri), linalg::dot(&rj, &rj));
    if !(sii > T::zero() && sjj > T::zero()) {
        return Ok(T::zero());
    }
    let r = linalg::dot(&ri, &rj) / (sii.sqrt() * sjj.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Two-sided Fisher-z test of zero partial correlation of `i` and `j` given `s`.
///
/// The statistic is `atanh(r)·sqrt(n - |s| - 3)`. Perfect correlation gives
/// `p = 0` with `infinite_statistic` set.
pub fn fisher_z_partial_correlation<T: Scalar>(
    data: &Dataset<T>,
    i: usize,
    j: usize,
    s: NodeSet,
) -> Result<IndependenceResult<T>> {
    check_args(data, i, j, s)?;
    let n = data.num_samples();
    let needed = s.len() + 4;
    if n < needed {
        return Err(Error::SampleTooSmall { needed, got: n });
    }
    let r = partial_correlation(data, i, j, s)?.as_f64();
    let dof = ((n - s.len() - 3) as f64).sqrt();
    if r.abs() >= 1.0 - 1e-15 {
        return Ok(IndependenceResult {
            statistic: T::lit(r.signum()) * T::infinity(),
            p_value: 0.0,
            method: TestMethod::FisherZ,
            sample_size: n,
            infinite_statistic: true,
        });
    }
    let z = r.atanh() * dof;
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0);
    Ok(IndependenceResult {
        statistic: T::lit(z),
        p_value: p,
        method: TestMethod::FisherZ,
        sample_size: n,
        infinite_statistic: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian_columns(seed: u64, d: usize, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn duplicated_column_is_perfectly_correlated() {
        let mut cols = gaussian_columns(1, 1, 50);
        cols.push(cols[0].clone());
        let d = Dataset::from_columns(cols).unwrap();
        let r = fisher_z_partial_correlation(&d, 0, 1, NodeSet::empty()).unwrap();
        assert!(r.infinite_statistic);
        assert_eq!(r.p_value, 0.0);
        assert!(r.rejects(0.05));
    }

    #[test]
    fn empty_conditioning_set_is_pearson() {
        let cols = gaussian_columns(2, 2, 300);
        let (a, b) = (&cols[0], &cols[1]);
        let ma = a.iter().sum::<f64>() / 300.0;
        let mb = b.iter().sum::<f64>() / 300.0;
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        let pearson = sab / (saa * sbb).sqrt();
        let d = Dataset::from_columns(cols).unwrap();
        let r = partial_correlation(&d, 0, 1, NodeSet::empty()).unwrap();
        assert!((r - pearson).abs() < 1e-12);
    }

    #[test]
    fn argument_checks() {
        let d = Dataset::from_columns(gaussian_columns(3, 3, 6)).unwrap();
        assert!(fisher_z_partial_correlation(&d, 0, 0, NodeSet::empty()).is_err());
        assert!(fisher_z_partial_correlation(&d, 0, 1, NodeSet::singleton(1)).is_err());
        assert!(fisher_z_partial_correlation(&d, 0, 5, NodeSet::empty()).is_err());
        let tiny = Dataset::from_columns(gaussian_columns(3, 3, 4)).unwrap();
        assert!(matches!(
            fisher_z_partial_correlation(&tiny, 0, 1, NodeSet::singleton(2)),
            Err(Error::SampleTooSmall { .. })
        ));
    }

    #[test]
    fn removes_common_cause() {
        // X1 -> X2, X1 -> X3: X2 and X3 are dependent but not given X1.
        let mut cols = gaussian_columns(4, 3, 2000);
        let x1 = cols[0].clone();
        for k in 0..2000 {
            cols[1][k] += 2.0 * x1[k];
            cols[2][k] -= 1.5 * x1[k];
        }
        let d = Dataset::from_columns(cols).unwrap();
        assert!(fisher_z_partial_correlation(&d, 1, 2, NodeSet::empty()).unwrap().p_value < 1e-6);
        let r = partial_correlation(&d, 1, 2, NodeSet::singleton(0)).unwrap();
        assert!(r.abs() < 0.1);
    }
}
