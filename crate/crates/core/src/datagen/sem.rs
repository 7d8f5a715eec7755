use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::rng;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// One summand of an additive mechanism, applied to a single parent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `coef · x`
    Linear { coef: f64 },
    /// `coef · (x + shift)²`
    ShiftedSquare { coef: f64, shift: f64 },
    /// `coef · exp(-rate · x²)`
    GaussianBump {
        coef: f64,
        #[serde(default = "default_rate")]
        rate: f64,
    },
    /// `coef · x³`
    Cube { coef: f64 },
    /// `coef · tanh(x)`
    Tanh { coef: f64 },
    /// `coef · sin(freq · x)`
    Sine { coef: f64, freq: f64 },
}

fn default_rate() -> f64 {
    2.0
}

impl Term {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Term::Linear { coef } => coef * x,
            Term::ShiftedSquare { coef, shift } => coef * (x + shift) * (x + shift),
            Term::GaussianBump { coef, rate } => coef * (-rate * x * x).exp(),
            Term::Cube { coef } => coef * x * x * x,
            Term::Tanh { coef } => coef * x.tanh(),
            Term::Sine { coef, freq } => coef * (freq * x).sin(),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Term::Linear { coef } | Term::Cube { coef } | Term::Tanh { coef } => coef.is_finite(),
            Term::ShiftedSquare { coef, shift } => coef.is_finite() && shift.is_finite(),
            Term::GaussianBump { coef, rate } => coef.is_finite() && rate.is_finite(),
            Term::Sine { coef, freq } => coef.is_finite() && freq.is_finite(),
        }
    }
}

/// How a node combines its parents with its noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    /// `intercept + Σ coefficients[k] · parent_k + noise`
    Linear {
        coefficients: Vec<f64>,
        #[serde(default)]
        intercept: f64,
    },
    /// `constant + Σ terms[k](parent_k) + noise`
    Additive {
        terms: Vec<Term>,
        #[serde(default)]
        constant: f64,
    },
    /// `(Σ coefficients[k] · parent_k) · noise`
    Product { coefficients: Vec<f64> },
}

impl Mechanism {
    fn arity(&self) -> usize {
        match self {
            Mechanism::Linear { coefficients, .. } | Mechanism::Product { coefficients } => {
                coefficients.len()
            }
            Mechanism::Additive { terms, .. } => terms.len(),
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            Mechanism::Linear { coefficients, intercept } => {
                intercept.is_finite() && coefficients.iter().all(|c| c.is_finite())
            }
            Mechanism::Product { coefficients } => coefficients.iter().all(|c| c.is_finite()),
            Mechanism::Additive { terms, constant } => {
                constant.is_finite() && terms.iter().all(Term::is_finite)
            }
        }
    }

    fn eval(&self, parents: &[f64], noise: f64) -> f64 {
        match self {
            Mechanism::Linear { coefficients, intercept } => {
                intercept + dot(coefficients, parents) + noise
            }
            Mechanism::Additive { terms, constant } => {
                constant + terms.iter().zip(parents).map(|(t, &x)| t.eval(x)).sum::<f64>() + noise
            }
            Mechanism::Product { coefficients } => dot(coefficients, parents) * noise,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum NoiseDist {
    Gaussian { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
}

/// `scale · N` with `N` drawn from `dist`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    #[serde(flatten)]
    pub dist: NoiseDist,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Noise {
    pub fn gaussian(sd: f64) -> Self {
        Noise {
            dist: NoiseDist::Gaussian { mean: 0.0, sd: 1.0 },
            scale: sd,
        }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Noise {
            dist: NoiseDist::Uniform { low, high },
            scale: 1.0,
        }
    }

    pub fn scaled(self, scale: f64) -> Self {
        Noise { scale, ..self }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.dist {
            NoiseDist::Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            NoiseDist::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
        };
        if !ok || !self.scale.is_finite() {
            return Err(Error::InvalidSpec(format!("invalid noise {self:?}")));
        }
        Ok(())
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self.dist {
            NoiseDist::Gaussian { mean, sd } => {
                let d = Normal::new(mean, sd).expect("validated");
                for v in out.iter_mut() {
                    *v = self.scale * d.sample(rng);
                }
            }
            NoiseDist::Uniform { low, high } => {
                let d = Uniform::new(low, high).expect("validated");
                for v in out.iter_mut() {
                    *v = self.scale * d.sample(rng);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub mechanism: Mechanism,
    pub noise: Noise,
}

/// A structural equation model: one mechanism and one independent noise per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemSpec {
    pub nodes: Vec<NodeSpec>,
}

impl SemSpec {
    pub fn names(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.name.clone()).collect()
    }

    /// Parent indices per node, in the order listed in each node's `parents`.
    fn parent_indices(&self) -> Result<Vec<Vec<usize>>> {
        let names = self.names();
        self.nodes
            .iter()
            .map(|node| {
                node.parents
                    .iter()
                    .map(|p| {
                        names
                            .iter()
                            .position(|n| n == p)
                            .ok_or_else(|| Error::UnknownVariable(p.clone()))
                    })
                    .collect()
            })
            .collect()
    }

    /// Checks names, arities, noise parameters and acyclicity; returns the DAG.
    pub fn validate(&self) -> Result<Dag> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidSpec("no nodes".into()));
        }
        let names = self.names();
        for (k, n) in names.iter().enumerate() {
            if n.is_empty() || names[..k].contains(n) {
                return Err(Error::InvalidSpec(format!("duplicate or empty name `{n}`")));
            }
        }
        let parents = self.parent_indices()?;
        for (node, pa) in self.nodes.iter().zip(&parents) {
            if node.mechanism.arity() != pa.len() {
                return Err(Error::InvalidSpec(format!(
                    "node `{}` has {} parents but its mechanism takes {}",
                    node.name,
                    pa.len(),
                    node.mechanism.arity()
                )));
            }
            let mut sorted = pa.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != pa.len() {
                return Err(Error::InvalidSpec(format!("node `{}` lists a parent twice", node.name)));
            }
            if !node.mechanism.is_finite() {
                return Err(Error::InvalidSpec(format!("node `{}` has non-finite parameters", node.name)));
            }
            node.noise.validate()?;
        }
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .flat_map(|(c, pa)| pa.iter().map(move |&p| (p, c)))
            .collect();
        match Dag::new(self.nodes.len(), &edges) {
            Err(Error::Cyclic) => Err(Error::InvalidSpec("graph is cyclic".into())),
            Err(Error::SelfLoop(i)) => Err(Error::InvalidSpec(format!(
                "node `{}` is its own parent",
                self.nodes[i].name
            ))),
            other => other,
        }
    }

    pub fn dag(&self) -> Result<Dag> {
        self.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SemSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("SemSpec serialises")
    }
}

/// Draws `n` rows. Node `k`'s noise comes from stream `k` of `seed`.
pub fn simulate(spec: &SemSpec, n: usize, seed: u64) -> Result<Dataset<f64>> {
    Ok(simulate_with_noise(spec, n, seed)?.0)
}

/// As [`simulate`], also returning the noise draws per node.
pub fn simulate_with_noise(spec: &SemSpec, n: usize, seed: u64) -> Result<(Dataset<f64>, Vec<Vec<f64>>)> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let dag = spec.validate()?;
    let parents = spec.parent_indices()?;
    let d = spec.nodes.len();
    let mut noise = vec![vec![0.0; n]; d];
    for (k, node) in spec.nodes.iter().enumerate() {
        let mut r = rng::stream(seed, k as u64);
        node.noise.sample_into(&mut r, &mut noise[k]);
    }
    let mut cols = vec![vec![0.0; n]; d];
    let mut pa_vals = Vec::new();
    for i in dag.topological_order() {
        let node = &spec.nodes[i];
        for r in 0..n {
            pa_vals.clear();
            pa_vals.extend(parents[i].iter().map(|&p| cols[p][r]));
            cols[i][r] = node.mechanism.eval(&pa_vals, noise[i][r]);
        }
    }
    if cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("simulated data"));
    }
    Ok((Dataset::new(spec.names(), cols)?, noise))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn root(name: &str, noise: Noise) -> NodeSpec {
        NodeSpec {
            name: name.into(),
            parents: vec![],
            mechanism: Mechanism::Linear {
                coefficients: vec![],
                intercept: 0.0,
            },
            noise,
        }
    }

    #[test]
    fn uniform_root_mean() {
        let spec = SemSpec {
            nodes: vec![root("A", Noise::uniform(0.0, 1.0))],
        };
        let d = simulate(&spec, 10_000, 1).unwrap();
        let m = d.column(0).iter().sum::<f64>() / 10_000.0;
        assert!((0.48..=0.52).contains(&m), "{m}");
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = SemSpec {
            nodes: vec![root("A", Noise::gaussian(1.0))],
        };
        assert_eq!(simulate(&spec, 50, 3).unwrap(), simulate(&spec, 50, 3).unwrap());
        assert_ne!(simulate(&spec, 50, 3).unwrap(), simulate(&spec, 50, 4).unwrap());
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut a = root("A", Noise::uniform(0.0, 1.0));
        let mut b = root("B", Noise::uniform(0.0, 1.0));
        a.parents = vec!["B".into()];
        a.mechanism = Mechanism::Linear {
            coefficients: vec![1.0],
            intercept: 0.0,
        };
        b.parents = vec!["A".into()];
        b.mechanism = a.mechanism.clone();
        let cyclic = SemSpec {
            nodes: vec![a.clone(), b],
        };
        assert!(matches!(cyclic.validate(), Err(Error::InvalidSpec(_))));

        let arity = SemSpec {
            nodes: vec![
                NodeSpec {
                    mechanism: Mechanism::Linear {
                        coefficients: vec![],
                        intercept: 0.0,
                    },
                    ..a.clone()
                },
                root("B", Noise::uniform(0.0, 1.0)),
            ],
        };
        assert!(arity.validate().is_err());

        let bad_noise = SemSpec {
            nodes: vec![root("A", Noise::uniform(1.0, 0.0))],
        };
        assert!(bad_noise.validate().is_err());

        let unknown = SemSpec {
            nodes: vec![a],
        };
        assert!(matches!(unknown.validate(), Err(Error::UnknownVariable(_))));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
[[nodes]]
name = "X"
mechanism = { kind = "linear", coefficients = [] }
noise = { dist = "uniform", low = -0.5, high = 0.5 }

[[nodes]]
name = "Y"
parents = ["X"]
mechanism = { kind = "additive", terms = [{ kind = "cube", coef = 1.0 }] }
noise = { dist = "gaussian", mean = 0.0, sd = 1.0, scale = 0.1 }
"#;
        let spec = SemSpec::from_toml(text).unwrap();
        assert_eq!(spec.nodes[1].noise.scale, 0.1);
        assert_eq!(spec.dag().unwrap(), Dag::new(2, &[(0, 1)]).unwrap());
        let again = SemSpec::from_toml(&spec.to_toml()).unwrap();
        assert_eq!(again, spec);
    }
}
