//! Regression of one variable on a candidate parent set, returning the
//! fitted noise values (residuals).

mod gp;
mod linear;

pub use gp::{fit_gp, GpConfig, GpDiagnostics};
pub use linear::fit_linear;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::NodeSet;
use crate::linalg;
use crate::scalar::Scalar;

/// Model class used for the functional relationships.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegressorKind {
    Linear,
    GaussianProcess,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitDiagnostics<T> {
    pub rss: T,
    /// Slopes then intercept, for linear fits.
    pub coefficients: Option<(Vec<T>, T)>,
    pub gp: Option<GpDiagnostics<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult<T> {
    pub residuals: Vec<T>,
    pub diagnostics: FitDiagnostics<T>,
}

impl<T: Scalar> FitResult<T> {
    pub(crate) fn from_residuals(residuals: Vec<T>) -> Self {
        let rss = linalg::dot(&residuals, &residuals);
        FitResult {
            residuals,
            diagnostics: FitDiagnostics {
                rss,
                coefficients: None,
                gp: None,
            },
        }
    }
}

/// Residuals of column `i` after regressing it on the columns in `parents`.
/// An empty parent set gives the centred column.
pub fn fitted_noise_values<T: Scalar>(
    data: &Dataset<T>,
    parents: NodeSet,
    i: usize,
    kind: RegressorKind,
    gp_config: &GpConfig,
) -> Result<FitResult<T>> {
    if i >= data.num_vars() {
        return Err(Error::InvalidNode {
            index: i,
            num_nodes: data.num_vars(),
        });
    }
    if parents.contains(i) {
        return Err(Error::InvalidArgument(format!(
            "response {i} is in its own regressor set"
        )));
    }
    if let Some(m) = parents.highest() {
        if m >= data.num_vars() {
            return Err(Error::InvalidNode {
                index: m,
                num_nodes: data.num_vars(),
            });
        }
    }
    let y = data.column(i);
    if parents.is_empty() {
        let mut fit = FitResult::from_residuals(linalg::centered(y));
        fit.diagnostics.coefficients = Some((Vec::new(), linalg::mean(y)));
        return Ok(fit);
    }
    let x = data.block(parents);
    match kind {
        RegressorKind::Linear => fit_linear(&x, y),
        RegressorKind::GaussianProcess => fit_gp(&x, y, gp_config),
    }
}
