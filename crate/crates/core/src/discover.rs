//! Enumeration of every DAG whose additive-noise fit leaves independent
//! residuals.
//!
//! The search peels off sink nodes: among the remaining variables, a node is
//! an admissible sink when its residual after regressing on all other
//! remaining variables is independent of them. The most independent sink is
//! followed on the current branch and every other admissible sink opens a new
//! branch, so all causal orders consistent with the data are found. Each
//! order is then pruned to a DAG by dropping predecessors whose removal keeps
//! the residual independent. Finally every distinct DAG is refitted on its own
//! parents and kept only if all residual checks pass.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::{minimal_edge_dags, Dag, NodeSet};
use crate::indep::{joint_residual_test, test_independence, TestConfig};
use crate::regress::{fitted_noise_values, GpConfig, RegressorKind};
use crate::scalar::Scalar;

/// Which regressor block the pruning step tests the reduced residual against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PruneTestSet {
    /// The current parent set, still including the removal candidate.
    Current,
    /// All predecessors in the causal order.
    AllPredecessors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub regressor: RegressorKind,
    pub gp: GpConfig,
    pub test: TestConfig,
    /// Also report the minimal-edge DAGs when several DAGs fit.
    pub faithful_mode: bool,
    /// Cap on the number of search branches.
    pub max_branches: usize,
    pub prune_test_set: PruneTestSet,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            regressor: RegressorKind::Linear,
            gp: GpConfig::default(),
            test: TestConfig::default(),
            faithful_mode: false,
            max_branches: 256,
            prune_test_set: PruneTestSet::Current,
        }
    }
}

impl DiscoveryConfig {
    pub fn linear() -> Self {
        DiscoveryConfig::default()
    }

    pub fn gaussian_process() -> Self {
        DiscoveryConfig {
            regressor: RegressorKind::GaussianProcess,
            ..DiscoveryConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.test.validate()?;
        if self.max_branches == 0 {
            return Err(Error::InvalidArgument("max_branches must be at least 1".into()));
        }
        if self.gp.starts == 0 || self.gp.max_iter == 0 {
            return Err(Error::InvalidArgument("gp starts and max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// One pending branch of the order search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchState {
    /// Variables not yet placed.
    pub remaining: NodeSet,
    /// Position in the causal order that the next sink fills (1-based).
    pub resume_position: usize,
    /// Sinks chosen so far, first found first.
    pub partial_order: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Unique,
    NoModel,
    Multiple,
}

impl Verdict {
    pub fn from_count(count: usize) -> Self {
        match count {
            0 => Verdict::NoModel,
            1 => Verdict::Unique,
            _ => Verdict::Multiple,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Unique => "Unique",
            Verdict::NoModel => "NoModel",
            Verdict::Multiple => "Multiple",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderSearch {
    /// Complete causal orders, roots first.
    pub orders: Vec<Vec<usize>>,
    pub branches_explored: usize,
    pub truncated: bool,
}

/// Residual checks of one fitted DAG.
#[derive(Clone, Debug, PartialEq)]
pub struct DagTrace {
    /// Per node: p-value of its residual against its parents (1 for roots).
    pub node_p_values: Vec<f64>,
    /// Pairwise residual p-values `(a, b, p)`.
    pub joint_p_values: Vec<(usize, usize, f64)>,
    /// Per-pair level used by the joint check.
    pub joint_level: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscoveryResult {
    /// Distinct accepted DAGs in canonical order.
    pub dags: Vec<Dag>,
    pub verdict: Verdict,
    /// Aligned with `dags`.
    pub traces: Vec<DagTrace>,
    pub orders_explored: usize,
    pub truncated: bool,
    /// Distinct pruned DAGs before the final residual filter.
    pub candidates: usize,
    /// Minimal-edge subset of `dags`, filled in faithful mode when the verdict
    /// is `Multiple`.
    pub minimal_edge_dags: Option<Vec<Dag>>,
}

impl DiscoveryResult {
    /// Machine-readable summary with edges named by column.
    pub fn to_json(&self, names: &[String]) -> Value {
        let edge_list = |g: &Dag| -> Vec<[String; 2]> {
            g.edges()
                .into_iter()
                .map(|(p, c)| [names[p].clone(), names[c].clone()])
                .collect()
        };
        let traces: Vec<Value> = self
            .traces
            .iter()
            .map(|t| {
                let nodes: serde_json::Map<String, Value> = t
                    .node_p_values
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| (names[i].clone(), json!(p)))
                    .collect();
                let pairs: Vec<Value> = t
                    .joint_p_values
                    .iter()
                    .map(|&(a, b, p)| json!({"a": names[a], "b": names[b], "p_value": p}))
                    .collect();
                json!({"node_p_values": nodes, "joint_p_values": pairs, "joint_level": t.joint_level})
            })
            .collect();
        let mut v = json!({
            "verdict": self.verdict.as_str(),
            "dags": self.dags.iter().map(edge_list).collect::<Vec<_>>(),
            "p_value_traces": traces,
            "orders_explored": self.orders_explored,
            "truncated": self.truncated,
        });
        if let Some(min) = &self.minimal_edge_dags {
            v["minimal_edge_dags"] = json!(min.iter().map(edge_list).collect::<Vec<_>>());
        }
        v
    }
}

/// Memoised fits and tests over one dataset.
///
/// Later computation depends only on (response, regressor set, test set), so
/// branches that revisit a remaining set, and pruning steps that repeat a
/// fit, reuse earlier results.
struct Evaluator<'a, T> {
    data: &'a Dataset<T>,
    config: &'a DiscoveryConfig,
    fits: HashMap<(usize, NodeSet), Arc<Vec<T>>>,
    tests: HashMap<(usize, NodeSet, NodeSet), f64>,
    sinks: HashMap<NodeSet, Vec<(usize, f64)>>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    fn new(data: &'a Dataset<T>, config: &'a DiscoveryConfig) -> Self {
        Evaluator {
            data,
            config,
            fits: HashMap::new(),
            tests: HashMap::new(),
            sinks: HashMap::new(),
        }
    }

    fn residuals(&mut self, i: usize, regressors: NodeSet) -> Result<Arc<Vec<T>>> {
        if let Some(r) = self.fits.get(&(i, regressors)) {
            return Ok(Arc::clone(r));
        }
        let fit = fitted_noise_values(
            self.data,
            regressors,
            i,
            self.config.regressor,
            &self.config.gp,
        )?;
        let r = Arc::new(fit.residuals);
        self.fits.insert((i, regressors), Arc::clone(&r));
        Ok(r)
    }

    /// p-value of the residual of `i` on `regressors`, tested against `block`.
    fn p_value(&mut self, i: usize, regressors: NodeSet, block: NodeSet) -> Result<f64> {
        if let Some(&p) = self.tests.get(&(i, regressors, block)) {
            return Ok(p);
        }
        let r = self.residuals(i, regressors)?;
        let cfg = TestConfig {
            seed: test_seed(self.config.test.seed, i, regressors, block),
            ..self.config.test.clone()
        };
        let p = test_independence(self.data, block, &r, &cfg)?.p_value;
        self.tests.insert((i, regressors, block), p);
        Ok(p)
    }

    fn sink_p_values(&mut self, remaining: NodeSet) -> Result<Vec<(usize, f64)>> {
        if let Some(v) = self.sinks.get(&remaining) {
            return Ok(v.clone());
        }
        let mut out = Vec::with_capacity(remaining.len());
        for i in remaining.iter() {
            let rest = remaining.without(i);
            out.push((i, self.p_value(i, rest, rest)?));
        }
        self.sinks.insert(remaining, out.clone());
        Ok(out)
    }

    fn find_orders(&mut self) -> Result<OrderSearch> {
        let d = self.data.num_vars();
        let alpha = self.config.test.alpha;
        let mut queue = VecDeque::from([BranchState {
            remaining: NodeSet::full(d),
            resume_position: d,
            partial_order: Vec::with_capacity(d),
        }]);
        let mut created = 1usize;
        let mut explored = 0usize;
        let mut truncated = false;
        let mut orders = Vec::new();
        'branches: while let Some(mut branch) = queue.pop_front() {
            explored += 1;
            while !branch.remaining.is_empty() {
                let ps = self.sink_p_values(branch.remaining)?;
                let mut best: Option<(usize, f64)> = None;
                for &(i, p) in &ps {
                    if p >= alpha && best.map_or(true, |(_, bp)| p > bp) {
                        best = Some((i, p));
                    }
                }
                let Some((chosen, _)) = best else {
                    // No admissible sink: the branch dies without an order.
                    continue 'branches;
                };
                for &(i, p) in &ps {
                    if p < alpha || i == chosen {
                        continue;
                    }
                    if created >= self.config.max_branches {
                        truncated = true;
                        continue;
                    }
                    created += 1;
                    let mut partial_order = branch.partial_order.clone();
                    partial_order.push(i);
                    queue.push_back(BranchState {
                        remaining: branch.remaining.without(i),
                        resume_position: branch.resume_position - 1,
                        partial_order,
                    });
                }
                branch.partial_order.push(chosen);
                branch.remaining.remove(chosen);
                branch.resume_position -= 1;
            }
            let mut order = branch.partial_order;
            order.reverse();
            orders.push(order);
        }
        Ok(OrderSearch {
            orders,
            branches_explored: explored,
            truncated,
        })
    }

    fn prune(&mut self, order: &[usize]) -> Result<Dag> {
        let d = self.data.num_vars();
        check_order(order, d)?;
        let alpha = self.config.test.alpha;
        let mut parents = vec![NodeSet::empty(); d];
        for (j, &i) in order.iter().enumerate() {
            let predecessors: NodeSet = order[..j].iter().copied().collect();
            let mut pa = predecessors;
            for &candidate in &order[..j] {
                let reduced = pa.without(candidate);
                let block = match self.config.prune_test_set {
                    PruneTestSet::Current => pa,
                    PruneTestSet::AllPredecessors => predecessors,
                };
                if self.p_value(i, reduced, block)? >= alpha {
                    pa = reduced;
                }
            }
            parents[i] = pa;
        }
        Dag::from_parent_sets(parents)
    }

    /// Refits `dag` node by node and runs every residual check.
    fn check_dag(&mut self, dag: &Dag) -> Result<(bool, DagTrace)> {
        let d = dag.num_nodes();
        let alpha = self.config.test.alpha;
        let mut node_p_values = Vec::with_capacity(d);
        let mut residuals = Vec::with_capacity(d);
        for (i, &pa) in dag.parent_sets().iter().enumerate() {
            node_p_values.push(self.p_value(i, pa, pa)?);
            residuals.push(self.residuals(i, pa)?);
        }
        let nodes_ok = node_p_values.iter().all(|&p| p >= alpha);
        let (joint_ok, joint_p_values, joint_level) = if d >= 2 {
            let cols: Vec<&[T]> = residuals.iter().map(|r| r.as_slice()).collect();
            let cfg = TestConfig {
                seed: test_seed(self.config.test.seed, usize::MAX, NodeSet::empty(), NodeSet::full(d)),
                ..self.config.test.clone()
            };
            let jt = joint_residual_test(&cols, &cfg)?;
            (jt.independent, jt.pairs, jt.level)
        } else {
            (true, Vec::new(), alpha)
        };
        Ok((
            nodes_ok && joint_ok,
            DagTrace {
                node_p_values,
                joint_p_values,
                joint_level,
            },
        ))
    }
}

fn test_seed(seed: u64, i: usize, regressors: NodeSet, block: NodeSet) -> u64 {
    let mut h = seed ^ 0x243F_6A88_85A3_08D3;
    for v in [i as u64, regressors.bits(), block.bits()] {
        h = splitmix(h ^ v);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_order(order: &[usize], d: usize) -> Result<()> {
    let set: NodeSet = order.iter().copied().collect();
    if order.len() != d || set != NodeSet::full(d) {
        return Err(Error::InvalidArgument(format!(
            "order {order:?} is not a permutation of 0..{d}"
        )));
    }
    Ok(())
}

fn check_input<T: Scalar>(data: &Dataset<T>, config: &DiscoveryConfig) -> Result<()> {
    config.validate()?;
    if data.num_vars() > crate::graph::MAX_NODES {
        return Err(Error::TooManyNodes(data.num_vars(), crate::graph::MAX_NODES));
    }
    Ok(())
}

/// All causal orders (roots first) reachable by peeling admissible sinks.
pub fn find_causal_orders<T: Scalar>(data: &Dataset<T>, config: &DiscoveryConfig) -> Result<OrderSearch> {
    check_input(data, config)?;
    Evaluator::new(data, config).find_orders()
}

/// Prunes the complete order (roots first) to a DAG.
pub fn prune_parents<T: Scalar>(data: &Dataset<T>, order: &[usize], config: &DiscoveryConfig) -> Result<Dag> {
    check_input(data, config)?;
    Evaluator::new(data, config).prune(order)
}

/// Per-node and joint residual checks of a given DAG under `config`.
pub fn check_dag<T: Scalar>(data: &Dataset<T>, dag: &Dag, config: &DiscoveryConfig) -> Result<(bool, DagTrace)> {
    check_input(data, config)?;
    if dag.num_nodes() != data.num_vars() {
        return Err(Error::NodeCountMismatch(dag.num_nodes(), data.num_vars()));
    }
    Evaluator::new(data, config).check_dag(dag)
}

pub fn discover<T: Scalar>(data: &Dataset<T>, config: &DiscoveryConfig) -> Result<DiscoveryResult> {
    check_input(data, config)?;
    let mut eval = Evaluator::new(data, config);
    let search = eval.find_orders()?;
    let mut candidates = BTreeSet::new();
    for order in &search.orders {
        candidates.insert(eval.prune(order)?);
    }
    let num_candidates = candidates.len();
    let mut dags = Vec::new();
    let mut traces = Vec::new();
    for dag in candidates {
        let (ok, trace) = eval.check_dag(&dag)?;
        if ok {
            dags.push(dag);
            traces.push(trace);
        }
    }
    let verdict = Verdict::from_count(dags.len());
    let minimal = if config.faithful_mode && verdict == Verdict::Multiple {
        Some(minimal_edge_dags(&dags)?)
    } else {
        None
    };
    Ok(DiscoveryResult {
        dags,
        verdict,
        traces,
        orders_explored: search.branches_explored,
        truncated: search.truncated,
        candidates: num_candidates,
        minimal_edge_dags: minimal,
    })
}
