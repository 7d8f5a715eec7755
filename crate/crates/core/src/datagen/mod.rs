//! Seeded simulation of structural equation models.

mod builtin;
pub mod rng;
mod sem;

pub use builtin::{
    bivariate_cubic, bivariate_gaussian_linear, dataset1, dataset1_with, dataset2, dataset3,
    dataset4, dataset5, random_additive_instance, Dataset1Coefficients, Dataset2Variant, Instance,
    DEFAULT_SAMPLES,
};
pub use sem::{simulate, simulate_with_noise, Mechanism, NodeSpec, Noise, NoiseDist, SemSpec, Term};
