//! Independence tests between residuals and regressor blocks.

mod fisher;
mod hsic;

pub use fisher::{fisher_z_partial_correlation, partial_correlation};
pub use hsic::{
    hsic_pvalue_gamma, hsic_pvalue_permutation, hsic_statistic, hsic_test, median_bandwidth,
};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestMethod {
    HsicGamma,
    HsicPermutation,
    FisherZ,
}

/// How the HSIC null distribution is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HsicMethod {
    Gamma,
    Permutation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BandwidthRule {
    /// Median of the nonzero pairwise Euclidean distances within the block.
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceResult<T> {
    pub statistic: T,
    pub p_value: f64,
    pub method: TestMethod,
    pub sample_size: usize,
    /// Set when the statistic diverged (perfect correlation in Fisher-z).
    pub infinite_statistic: bool,
}

impl<T: Scalar> IndependenceResult<T> {
    pub(crate) fn trivial(method: TestMethod, sample_size: usize) -> Self {
        IndependenceResult {
            statistic: T::zero(),
            p_value: 1.0,
            method,
            sample_size,
            infinite_statistic: false,
        }
    }

    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub alpha: f64,
    pub hsic_method: HsicMethod,
    pub permutations: usize,
    pub bandwidth: BandwidthRule,
    /// Seed for permutation nulls.
    pub seed: u64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            hsic_method: HsicMethod::Gamma,
            permutations: 1000,
            bandwidth: BandwidthRule::MedianHeuristic,
            seed: 0,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.hsic_method == HsicMethod::Permutation && self.permutations < 100 {
            return Err(Error::InvalidArgument(format!(
                "permutation test needs at least 100 permutations, got {}",
                self.permutations
            )));
        }
        if let BandwidthRule::Fixed(v) = self.bandwidth {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Tests the residuals of a regression against the regressor block `s`.
///
/// An empty block passes trivially with `p = 1`.
pub fn test_independence<T: Scalar>(
    data: &Dataset<T>,
    s: NodeSet,
    residuals: &[T],
    config: &TestConfig,
) -> Result<IndependenceResult<T>> {
    let n = data.num_samples();
    if residuals.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: residuals.len(),
        });
    }
    if let Some(m) = s.highest() {
        if m >= data.num_vars() {
            return Err(Error::InvalidNode {
                index: m,
                num_nodes: data.num_vars(),
            });
        }
    }
    let method = match config.hsic_method {
        HsicMethod::Gamma => TestMethod::HsicGamma,
        HsicMethod::Permutation => TestMethod::HsicPermutation,
    };
    if s.is_empty() {
        return Ok(IndependenceResult::trivial(method, n));
    }
    hsic_test(&data.block(s), &[residuals], config)
}

/// Outcome of the pairwise residual check.
#[derive(Clone, Debug, PartialEq)]
pub struct JointTest {
    /// `(a, b, p)` for every pair of columns.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Bonferroni-corrected per-pair level.
    pub level: f64,
    pub independent: bool,
}

/// Pairwise HSIC over all column pairs at level `alpha / #pairs`.
pub fn joint_residual_test<T: Scalar>(residuals: &[&[T]], config: &TestConfig) -> Result<JointTest> {
    let d = residuals.len();
    if d < 2 {
        return Err(Error::InvalidArgument(
            "joint residual test needs at least two columns".into(),
        ));
    }
    let num_pairs = d * (d - 1) / 2;
    let level = config.alpha / num_pairs as f64;
    let mut pairs = Vec::with_capacity(num_pairs);
    let mut k = 0u64;
    for a in 0..d {
        for b in (a + 1)..d {
            let cfg = TestConfig {
                seed: config.seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                ..config.clone()
            };
            k += 1;
            let r = hsic_test(&[residuals[a]], &[residuals[b]], &cfg)?;
            pairs.push((a, b, r.p_value));
        }
    }
    let independent = pairs.iter().all(|&(_, _, p)| p >= level);
    Ok(JointTest {
        pairs,
        level,
        independent,
    })
}

pub fn joint_residual_independence<T: Scalar>(residuals: &[&[T]], config: &TestConfig) -> Result<bool> {
    Ok(joint_residual_test(residuals, config)?.independent)
}
