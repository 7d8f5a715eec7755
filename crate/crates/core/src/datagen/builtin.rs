//! The named simulation studies and a few small benchmark models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::rng;
use super::sem::{simulate, Mechanism, NodeSpec, Noise, SemSpec, Term};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// Sample size of the discovery studies.
pub const DEFAULT_SAMPLES: usize = 400;

// Coefficients are drawn from this stream so they never share draws with
// the per-node noise streams.
const COEF_STREAM: u64 = 1 << 32;

/// A simulated sample with its generating model.
#[derive(Clone, Debug)]
pub struct Instance {
    pub data: Dataset<f64>,
    pub dag: Dag,
    pub spec: SemSpec,
    pub coefficients: BTreeMap<String, f64>,
    pub seed: u64,
}

fn names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

fn node(name: &str, parents: &[&str], mechanism: Mechanism, noise: Noise) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        parents: parents.iter().map(|s| s.to_string()).collect(),
        mechanism,
        noise,
    }
}

fn linear(coefficients: &[f64]) -> Mechanism {
    Mechanism::Linear {
        coefficients: coefficients.to_vec(),
        intercept: 0.0,
    }
}

fn build(spec: SemSpec, n: usize, seed: u64, coefficients: BTreeMap<String, f64>) -> Result<Instance> {
    let dag = spec.validate()?;
    let data = simulate(&spec, n, seed)?;
    Ok(Instance {
        data,
        dag,
        spec,
        coefficients,
        seed,
    })
}

/// Coefficients of the four-node diamond model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dataset1Coefficients {
    pub a12: f64,
    pub a13: f64,
    pub a24: f64,
    pub a34: f64,
    pub beta: [f64; 4],
}

impl Dataset1Coefficients {
    pub fn sample(rng: &mut ChaCha8Rng) -> Self {
        let mut a = || rng.random_range(-5.0..5.0);
        let (a12, a13, a24, a34) = (a(), a(), a(), a());
        let beta = std::array::from_fn(|_| rng.random_range(0.0..0.5));
        Dataset1Coefficients {
            a12,
            a13,
            a24,
            a34,
            beta,
        }
    }

    /// Covariance matrix implied by the model with standard normal noise.
    pub fn covariance(&self) -> [[f64; 4]; 4] {
        // X = B X + D N  =>  X = (I - B)^{-1} D N, B strictly lower triangular.
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = self.beta[i];
        }
        let mix = |m: &mut [[f64; 4]; 4], child: usize, parent: usize, c: f64| {
            for k in 0..4 {
                m[child][k] += c * m[parent][k];
            }
        };
        mix(&mut m, 1, 0, self.a12);
        mix(&mut m, 2, 0, self.a13);
        mix(&mut m, 3, 1, self.a24);
        mix(&mut m, 3, 2, self.a34);
        let mut cov = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] = (0..4).map(|k| m[i][k] * m[j][k]).sum();
            }
        }
        cov
    }
}

/// Diamond `X1 → {X2, X3} → X4` with fixed coefficients and Gaussian noise.
pub fn dataset1_with(coef: Dataset1Coefficients, n: usize, seed: u64) -> Result<Instance> {
    let g = Noise::gaussian(1.0);
    let b = coef.beta;
    let spec = SemSpec {
        nodes: vec![
            node("X1", &[], linear(&[]), g.clone().scaled(b[0])),
            node("X2", &["X1"], linear(&[coef.a12]), g.clone().scaled(b[1])),
            node("X3", &["X1"], linear(&[coef.a13]), g.clone().scaled(b[2])),
            node("X4", &["X2", "X3"], linear(&[coef.a24, coef.a34]), g.scaled(b[3])),
        ],
    };
    let mut c = BTreeMap::new();
    c.insert("alpha12".into(), coef.a12);
    c.insert("alpha13".into(), coef.a13);
    c.insert("alpha24".into(), coef.a24);
    c.insert("alpha34".into(), coef.a34);
    for (i, &v) in b.iter().enumerate() {
        c.insert(format!("beta{}", i + 1), v);
    }
    build(spec, n, seed, c)
}

/// Diamond model with α ~ U(-5, 5) and β ~ U(0, 0.5) drawn per call.
pub fn dataset1(n: usize, seed: u64) -> Result<Instance> {
    let coef = Dataset1Coefficients::sample(&mut rng::stream(seed, COEF_STREAM));
    dataset1_with(coef, n, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dataset2Variant {
    Lin1,
    Nonlin1,
    Lin2,
    Nonlin2,
}

impl Dataset2Variant {
    pub const ALL: [Dataset2Variant; 4] = [
        Dataset2Variant::Lin1,
        Dataset2Variant::Nonlin1,
        Dataset2Variant::Lin2,
        Dataset2Variant::Nonlin2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dataset2Variant::Lin1 => "lin1",
            Dataset2Variant::Nonlin1 => "nonlin1",
            Dataset2Variant::Lin2 => "lin2",
            Dataset2Variant::Nonlin2 => "nonlin2",
        }
    }
}

impl fmt::Display for Dataset2Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dataset2Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset2Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset2 variant `{s}`")))
    }
}

/// Draw from U([-2, -1] ∪ [1, 2]).
fn signed_coef(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(1.0..2.0);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Four-variable models with uniform noise U(-0.5, 0.5).
///
/// Structure 1 (`lin1`, `nonlin1`): `X1 → X3`, `{X1, X2, X3} → X4`.
/// Structure 2 (`lin2`, `nonlin2`): `X1 → X2`, `{X1, X2} → X3`, `{X2, X3} → X4`.
pub fn dataset2(variant: Dataset2Variant, n: usize, seed: u64) -> Result<Instance> {
    let mut r = rng::stream(seed, COEF_STREAM);
    let u = Noise::uniform(-0.5, 0.5);
    let root = |name: &str| node(name, &[], linear(&[]), u.clone());
    let mut c = BTreeMap::new();
    let mut draw = |name: &str, c: &mut BTreeMap<String, f64>| {
        let v = signed_coef(&mut r);
        c.insert(name.to_string(), v);
        v
    };
    let nodes = match variant {
        Dataset2Variant::Lin1 | Dataset2Variant::Nonlin1 => {
            let a3 = draw("a3", &mut c);
            let a41 = draw("a41", &mut c);
            let a42 = draw("a42", &mut c);
            let a43 = draw("a43", &mut c);
            let (m3, m4) = if variant == Dataset2Variant::Lin1 {
                (linear(&[a3]), linear(&[a41, a42, a43]))
            } else {
                (
                    Mechanism::Additive {
                        terms: vec![Term::GaussianBump { coef: a3, rate: 2.0 }],
                        constant: -1.0,
                    },
                    Mechanism::Additive {
                        terms: vec![
                            Term::ShiftedSquare { coef: a41, shift: 1.0 },
                            Term::Linear { coef: a42 },
                            Term::Linear { coef: a43 },
                        ],
                        constant: 0.0,
                    },
                )
            };
            vec![
                root("X1"),
                root("X2"),
                node("X3", &["X1"], m3, u.clone()),
                node("X4", &["X1", "X2", "X3"], m4, u.clone()),
            ]
        }
        Dataset2Variant::Lin2 | Dataset2Variant::Nonlin2 => {
            let b2 = draw("b2", &mut c);
            let b31 = draw("b31", &mut c);
            let b32 = draw("b32", &mut c);
            let b42 = draw("b42", &mut c);
            let b43 = draw("b43", &mut c);
            let (m3, m4) = if variant == Dataset2Variant::Lin2 {
                (linear(&[b31, b32]), linear(&[b42, b43]))
            } else {
                (
                    Mechanism::Additive {
                        terms: vec![
                            Term::GaussianBump { coef: b31, rate: 2.0 },
                            Term::Linear { coef: b32 },
                        ],
                        constant: 0.0,
                    },
                    Mechanism::Additive {
                        terms: vec![
                            Term::ShiftedSquare { coef: b42, shift: 1.0 },
                            Term::Linear { coef: b43 },
                        ],
                        constant: 0.0,
                    },
                )
            };
            vec![
                root("X1"),
                node("X2", &["X1"], linear(&[b2]), u.clone()),
                node("X3", &["X1", "X2"], m3, u.clone()),
                node("X4", &["X2", "X3"], m4, u.clone()),
            ]
        }
    };
    build(SemSpec { nodes }, n, seed, c)
}

/// `X1 = N1`, `X2 = X1 + N2`, `X3 = X2 - X1 + N3` with `N ~ U(0, 0.5)`.
///
/// The two paths from `X1` to `X3` cancel, so `X3 = N2 + N3` is independent
/// of `X1` although the graph connects them.
pub fn dataset3(n: usize, seed: u64) -> Result<Instance> {
    let u = Noise::uniform(0.0, 0.5);
    let spec = SemSpec {
        nodes: vec![
            node("X1", &[], linear(&[]), u.clone()),
            node("X2", &["X1"], linear(&[1.0]), u.clone()),
            node("X3", &["X1", "X2"], linear(&[-1.0, 1.0]), u),
        ],
    };
    build(spec, n, seed, BTreeMap::new())
}

/// Gaussian linear model on `X1 → X3`, `{X1, X2, X3} → X4`.
pub fn dataset4(n: usize, seed: u64) -> Result<Instance> {
    let g = Noise::gaussian(1.0);
    let spec = SemSpec {
        nodes: vec![
            node("X1", &[], linear(&[]), g.clone().scaled(0.5)),
            node("X2", &[], linear(&[]), g.clone().scaled(0.5)),
            node("X3", &["X1"], linear(&[-1.0]), g.clone().scaled(0.1)),
            node("X4", &["X1", "X2", "X3"], linear(&[1.5, -2.0, 1.0]), g),
        ],
    };
    build(spec, n, seed, BTreeMap::new())
}

/// `X1 = N1`, `X2 = X1 + 0.5 N2`, `X3 = (X1 - X2) · 0.5 N3`, `N ~ U(-0.5, 0.5)`.
pub fn dataset5(n: usize, seed: u64) -> Result<Instance> {
    let u = Noise::uniform(-0.5, 0.5);
    let spec = SemSpec {
        nodes: vec![
            node("X1", &[], linear(&[]), u.clone()),
            node("X2", &["X1"], linear(&[1.0]), u.clone().scaled(0.5)),
            node(
                "X3",
                &["X1", "X2"],
                Mechanism::Product {
                    coefficients: vec![1.0, -1.0],
                },
                u.scaled(0.5),
            ),
        ],
    };
    build(spec, n, seed, BTreeMap::new())
}

/// `X ~ U(-1.5, 1.5)`, `Y = X³ + U(-0.5, 0.5)`.
pub fn bivariate_cubic(n: usize, seed: u64) -> Result<Instance> {
    let spec = SemSpec {
        nodes: vec![
            node("X", &[], linear(&[]), Noise::uniform(-1.5, 1.5)),
            node(
                "Y",
                &["X"],
                Mechanism::Additive {
                    terms: vec![Term::Cube { coef: 1.0 }],
                    constant: 0.0,
                },
                Noise::uniform(-0.5, 0.5),
            ),
        ],
    };
    build(spec, n, seed, BTreeMap::new())
}

/// `X ~ N(0, 1)`, `Y = slope · X + N(0, 1)`.
pub fn bivariate_gaussian_linear(slope: f64, n: usize, seed: u64) -> Result<Instance> {
    let spec = SemSpec {
        nodes: vec![
            node("X", &[], linear(&[]), Noise::gaussian(1.0)),
            node("Y", &["X"], linear(&[slope]), Noise::gaussian(1.0)),
        ],
    };
    let mut c = BTreeMap::new();
    c.insert("slope".into(), slope);
    build(spec, n, seed, c)
}

fn random_term(r: &mut ChaCha8Rng) -> Term {
    let coef = signed_coef(r);
    match r.random_range(0..3) {
        0 => Term::ShiftedSquare { coef, shift: 1.0 },
        1 => Term::GaussianBump { coef: 2.0 * coef, rate: 2.0 },
        _ => Term::Cube { coef },
    }
}

/// Random nonlinear additive-noise model on `num_nodes` variables.
///
/// A random causal order is drawn and every forward pair is connected with
/// probability 1/2 (the graph is redrawn while it has no edges). Each edge
/// contributes a random nonlinear term with coefficient magnitude in [1, 2];
/// all noises are U(-0.5, 0.5), roots U(-1, 1).
pub fn random_additive_instance(num_nodes: usize, n: usize, seed: u64) -> Result<Instance> {
    if num_nodes < 2 {
        return Err(Error::InvalidArgument("random instance needs at least two nodes".into()));
    }
    let mut r = rng::stream(seed, COEF_STREAM);
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(&mut r);
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    while parents.iter().all(Vec::is_empty) {
        for p in parents.iter_mut() {
            p.clear();
        }
        for (a, &pa) in order.iter().enumerate() {
            for &ch in &order[a + 1..] {
                if r.random_bool(0.5) {
                    parents[ch].push(pa);
                }
            }
        }
    }
    let names = names(num_nodes);
    let mut c = BTreeMap::new();
    let nodes = (0..num_nodes)
        .map(|i| {
            let mut pa = parents[i].clone();
            pa.sort_unstable();
            let terms: Vec<Term> = pa.iter().map(|_| random_term(&mut r)).collect();
            for (&p, t) in pa.iter().zip(&terms) {
                if let Term::ShiftedSquare { coef, .. }
                | Term::GaussianBump { coef, .. }
                | Term::Cube { coef } = *t
                {
                    c.insert(format!("{}->{}", names[p], names[i]), coef);
                }
            }
            let noise = if pa.is_empty() {
                Noise::uniform(-1.0, 1.0)
            } else {
                Noise::uniform(-0.5, 0.5)
            };
            NodeSpec {
                name: names[i].clone(),
                parents: pa.iter().map(|&p| names[p].clone()).collect(),
                mechanism: Mechanism::Additive { terms, constant: 0.0 },
                noise,
            }
        })
        .collect();
    build(SemSpec { nodes }, n, seed, c)
}
