//! Causal structure discovery with additive noise models.
//!
//! Given an i.i.d. sample of `d` variables, [`discover::discover`] enumerates
//! every DAG for which an additive-noise model (linear or Gaussian-process)
//! can be fitted with residuals independent of the regressors. A single
//! surviving DAG is reported as [`Verdict::Unique`]; zero or several DAGs mean
//! the model class assumption does not single out a graph, and the caller
//! gets "I do not know." instead of a guess.
//!
//! The numeric core (regression, kernel statistics, Fisher-z) is generic over
//! the [`Scalar`] float type. Simulation and the experiment harness work in
//! `f64`; the aliases below name the common instantiations.

pub mod data;
pub mod datagen;
pub mod discover;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod indep;
pub mod linalg;
pub mod regress;
pub mod scalar;

pub use data::Dataset;
pub use discover::{discover, DiscoveryConfig, DiscoveryResult, Verdict};
pub use error::{Error, Result};
pub use graph::{Dag, NodeSet};
pub use indep::{HsicMethod, IndependenceResult, TestConfig};
pub use regress::{FitResult, GpConfig, RegressorKind};
pub use scalar::Scalar;

/// Default working precision.
pub type Real = f64;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
pub type IndependenceResult64 = IndependenceResult<f64>;
pub type IndependenceResult32 = IndependenceResult<f32>;
pub type DiscoveryResult64 = DiscoveryResult;
