//! Replicated simulation studies with correct/wrong/undecided scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::datagen::{self, rng::derive_seed, Dataset2Variant, Instance};
use crate::discover::{discover, DiscoveryConfig, Verdict};
use crate::error::{Error, Result};
use crate::graph::{d_separated, markov_equivalence_class, Dag, NodeSet};
use crate::indep::fisher_z_partial_correlation;
use crate::regress::RegressorKind;

/// A named simulation setting scored by [`run_discovery_study`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Study {
    Dataset2(Dataset2Variant),
    Dataset3,
    Dataset4,
    Dataset5,
}

impl Study {
    pub fn name(self) -> String {
        match self {
            Study::Dataset2(v) => format!("dataset2:{v}"),
            Study::Dataset3 => "dataset3".into(),
            Study::Dataset4 => "dataset4".into(),
            Study::Dataset5 => "dataset5".into(),
        }
    }

    pub fn generate(self, n: usize, seed: u64) -> Result<Instance> {
        match self {
            Study::Dataset2(v) => datagen::dataset2(v, n, seed),
            Study::Dataset3 => datagen::dataset3(n, seed),
            Study::Dataset4 => datagen::dataset4(n, seed),
            Study::Dataset5 => datagen::dataset5(n, seed),
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dataset3" => Ok(Study::Dataset3),
            "dataset4" => Ok(Study::Dataset4),
            "dataset5" => Ok(Study::Dataset5),
            _ => match s.strip_prefix("dataset2:") {
                Some(v) => Ok(Study::Dataset2(v.parse()?)),
                None => Err(Error::InvalidArgument(format!("unknown study `{s}`"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Correct,
    Wrong,
    Undecided,
    Truncated,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRow {
    pub method: String,
    pub study: String,
    pub correct: usize,
    pub wrong: usize,
    pub undecided: usize,
    pub truncated: usize,
}

impl OutcomeRow {
    pub fn total(&self) -> usize {
        self.correct + self.wrong + self.undecided + self.truncated
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MissRow {
    pub sample_size: usize,
    pub misses: usize,
    pub replicates: usize,
}

impl MissRow {
    pub fn proportion(&self) -> f64 {
        self.misses as f64 / self.replicates as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReportTable {
    Outcomes(Vec<OutcomeRow>),
    MissCurve(Vec<MissRow>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub replicates: usize,
    pub config: BTreeMap<String, String>,
    pub wall_time_secs: f64,
    pub table: ReportTable,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        match &self.table {
            ReportTable::Outcomes(rows) => {
                let mut s = String::from("method,study,correct,wrong,undecided,truncated,replicates\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        r.method,
                        r.study,
                        r.correct,
                        r.wrong,
                        r.undecided,
                        r.truncated,
                        r.total()
                    ));
                }
                s
            }
            ReportTable::MissCurve(rows) => {
                let mut s = String::from("sample_size,misses,replicates,proportion\n");
                for r in rows {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        r.sample_size,
                        r.misses,
                        r.replicates,
                        r.proportion()
                    ));
                }
                s
            }
        }
    }

    /// `(sample size, proportion)` pairs for plotting the miss curve.
    pub fn curve_csv(&self) -> Option<String> {
        let ReportTable::MissCurve(rows) = &self.table else {
            return None;
        };
        let mut s = String::from("sample_size,proportion\n");
        for r in rows {
            s.push_str(&format!("{},{}\n", r.sample_size, r.proportion()));
        }
        Some(s)
    }

    /// Methods as rows, studies as columns, cells `correct/wrong/undecided`.
    pub fn to_markdown(&self) -> String {
        match &self.table {
            ReportTable::Outcomes(rows) => {
                let studies: Vec<&str> = rows
                    .iter()
                    .map(|r| r.study.as_str())
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let mut methods: Vec<&str> = Vec::new();
                for r in rows {
                    if !methods.contains(&r.method.as_str()) {
                        methods.push(&r.method);
                    }
                }
                let mut s = format!("| | {} |\n|---|{}\n", studies.join(" | "), "---|".repeat(studies.len()));
                for m in methods {
                    s.push_str(&format!("| {m} |"));
                    for st in &studies {
                        let cell = rows
                            .iter()
                            .find(|r| r.method == m && r.study == *st)
                            .map(|r| {
                                let mut c = format!("{}/{}/{}", r.correct, r.wrong, r.undecided);
                                if r.truncated > 0 {
                                    c.push_str(&format!(" (+{} truncated)", r.truncated));
                                }
                                c
                            })
                            .unwrap_or_default();
                        s.push_str(&format!(" {cell} |"));
                    }
                    s.push('\n');
                }
                s.push_str(&format!(
                    "\ncorrect/wrong/undecided (out of {}).\n",
                    self.replicates
                ));
                s
            }
            ReportTable::MissCurve(rows) => {
                let mut s = String::from("| sample size | misses | replicates | proportion |\n|---|---|---|---|\n");
                for r in rows {
                    s.push_str(&format!(
                        "| {} | {} | {} | {:.3} |\n",
                        r.sample_size,
                        r.misses,
                        r.replicates,
                        r.proportion()
                    ));
                }
                s
            }
        }
    }
}

/// Every `(i, j, S)` with `i < j` and `S ⊆ V \ {i, j}`, split by whether the
/// DAG d-separates `i` and `j` given `S`: `(separated, connected)`.
#[allow(clippy::type_complexity)]
pub fn partial_correlation_tests(
    dag: &Dag,
) -> Result<(Vec<(usize, usize, NodeSet)>, Vec<(usize, usize, NodeSet)>)> {
    let d = dag.num_nodes();
    let mut zero = Vec::new();
    let mut nonzero = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let others = NodeSet::full(d).without(i).without(j);
            for s in others.subsets() {
                let a = NodeSet::singleton(i);
                let b = NodeSet::singleton(j);
                if d_separated(dag, a, b, s)? {
                    zero.push((i, j, s));
                } else {
                    nonzero.push((i, j, s));
                }
            }
        }
    }
    Ok((zero, nonzero))
}

/// For each sample size, the share of replicates of the diamond model in
/// which at least one truly nonzero (partial) correlation is not rejected by
/// the Fisher-z test at level `alpha`.
pub fn run_faithfulness_miss(
    sample_sizes: &[usize],
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<ExperimentReport> {
    if reps == 0 {
        return Err(Error::InvalidArgument("replicate count must be at least 1".into()));
    }
    if sample_sizes.is_empty() {
        return Err(Error::InvalidArgument("need at least one sample size".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let start = Instant::now();
    let mut rows = Vec::with_capacity(sample_sizes.len());
    for &n in sample_sizes {
        let label = format!("dataset1/n={n}");
        let misses: Vec<bool> = (0..reps as u64)
            .into_par_iter()
            .map(|r| -> Result<bool> {
                let inst = datagen::dataset1(n, derive_seed(seed, &label, r))?;
                let (_, nonzero) = partial_correlation_tests(&inst.dag)?;
                for (i, j, s) in nonzero {
                    if !fisher_z_partial_correlation(&inst.data, i, j, s)?.rejects(alpha) {
                        return Ok(true);
                    }
                }
                Ok(false)
            })
            .collect::<Result<_>>()?;
        rows.push(MissRow {
            sample_size: n,
            misses: misses.iter().filter(|&&m| m).count(),
            replicates: reps,
        });
    }
    let mut config = BTreeMap::new();
    config.insert("alpha".into(), alpha.to_string());
    config.insert("seed".into(), seed.to_string());
    config.insert(
        "sample_sizes".into(),
        sample_sizes.iter().map(usize::to_string).collect::<Vec<_>>().join(","),
    );
    Ok(ExperimentReport {
        name: "dataset1".into(),
        replicates: reps,
        config,
        wall_time_secs: start.elapsed().as_secs_f64(),
        table: ReportTable::MissCurve(rows),
    })
}

/// Scores one discovery run against the generating DAG.
///
/// In faithful mode the minimal-edge DAGs (the single DAG for a unique
/// verdict) are compared with the Markov equivalence class of the truth.
pub fn classify(truth: &Dag, result: &crate::DiscoveryResult, faithful_mode: bool) -> Result<Outcome> {
    if result.truncated {
        return Ok(Outcome::Truncated);
    }
    if faithful_mode {
        let estimate: BTreeSet<Dag> = match result.verdict {
            Verdict::NoModel => return Ok(Outcome::Undecided),
            Verdict::Unique => result.dags.iter().cloned().collect(),
            Verdict::Multiple => result
                .minimal_edge_dags
                .clone()
                .map(Ok)
                .unwrap_or_else(|| crate::graph::minimal_edge_dags(&result.dags))?
                .into_iter()
                .collect(),
        };
        let class: BTreeSet<Dag> = markov_equivalence_class(truth)?.into_iter().collect();
        return Ok(if estimate == class {
            Outcome::Correct
        } else {
            Outcome::Wrong
        });
    }
    Ok(match result.verdict {
        Verdict::Unique if result.dags[0] == *truth => Outcome::Correct,
        Verdict::Unique => Outcome::Wrong,
        Verdict::NoModel | Verdict::Multiple => Outcome::Undecided,
    })
}

pub fn method_label(config: &DiscoveryConfig) -> String {
    let base = match config.regressor {
        RegressorKind::Linear => "ANM-linear",
        RegressorKind::GaussianProcess => "ANM-GP",
    };
    if config.faithful_mode {
        format!("{base} (minimal edges)")
    } else {
        base.to_string()
    }
}

/// Simulates `reps` samples of size `n` from `study`, runs discovery on each
/// and counts outcomes. Replicate `r` uses seed `(seed, study name, r)`.
pub fn run_discovery_study(
    study: Study,
    config: &DiscoveryConfig,
    reps: usize,
    n: usize,
    seed: u64,
) -> Result<ExperimentReport> {
    if reps == 0 {
        return Err(Error::InvalidArgument("replicate count must be at least 1".into()));
    }
    config.validate()?;
    let start = Instant::now();
    let name = study.name();
    let outcomes: Vec<Outcome> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<Outcome> {
            let inst = study.generate(n, derive_seed(seed, &name, r))?;
            let result = discover(&inst.data, config)?;
            classify(&inst.dag, &result, config.faithful_mode)
        })
        .collect::<Result<_>>()?;
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count();
    let row = OutcomeRow {
        method: method_label(config),
        study: name.clone(),
        correct: count(Outcome::Correct),
        wrong: count(Outcome::Wrong),
        undecided: count(Outcome::Undecided),
        truncated: count(Outcome::Truncated),
    };
    let mut cfg = BTreeMap::new();
    cfg.insert("n".into(), n.to_string());
    cfg.insert("seed".into(), seed.to_string());
    cfg.insert("alpha".into(), config.test.alpha.to_string());
    cfg.insert("regressor".into(), format!("{:?}", config.regressor));
    cfg.insert("hsic_method".into(), format!("{:?}", config.test.hsic_method));
    cfg.insert("faithful_mode".into(), config.faithful_mode.to_string());
    cfg.insert("max_branches".into(), config.max_branches.to_string());
    Ok(ExperimentReport {
        name,
        replicates: reps,
        config: cfg,
        wall_time_secs: start.elapsed().as_secs_f64(),
        table: ReportTable::Outcomes(vec![row]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_test_sets() {
        let g = Dag::new(4, &[(0, 1), (0, 2), (1, 3), (2, 3)]).unwrap();
        let (zero, nonzero) = partial_correlation_tests(&g).unwrap();
        assert_eq!(zero.len() + nonzero.len(), 24);
        let expected = vec![
            (0, 3, [1, 2].into_iter().collect::<NodeSet>()),
            (1, 2, NodeSet::singleton(0)),
        ];
        assert_eq!(zero, expected);
    }

    #[test]
    fn study_names_parse() {
        for s in ["dataset3", "dataset4", "dataset5", "dataset2:lin1", "dataset2:nonlin2"] {
            assert_eq!(s.parse::<Study>().unwrap().name(), s);
        }
        assert!("dataset2:foo".parse::<Study>().is_err());
        assert!("dataset9".parse::<Study>().is_err());
    }

    #[test]
    fn zero_reps_is_an_error() {
        assert!(run_faithfulness_miss(&[100], 0, 0.05, 1).is_err());
        assert!(run_discovery_study(Study::Dataset5, &DiscoveryConfig::linear(), 0, 400, 1).is_err());
    }

    #[test]
    fn classification() {
        let truth = Dag::new(2, &[(0, 1)]).unwrap();
        let rev = Dag::new(2, &[(1, 0)]).unwrap();
        let mk = |dags: Vec<Dag>| crate::DiscoveryResult {
            verdict: Verdict::from_count(dags.len()),
            traces: Vec::new(),
            dags,
            orders_explored: 1,
            truncated: false,
            candidates: 0,
            minimal_edge_dags: None,
        };
        assert_eq!(classify(&truth, &mk(vec![truth.clone()]), false).unwrap(), Outcome::Correct);
        assert_eq!(classify(&truth, &mk(vec![rev.clone()]), false).unwrap(), Outcome::Wrong);
        assert_eq!(classify(&truth, &mk(vec![]), false).unwrap(), Outcome::Undecided);
        let both = mk(vec![truth.clone(), rev.clone()]);
        assert_eq!(classify(&truth, &both, false).unwrap(), Outcome::Undecided);
        assert_eq!(classify(&truth, &both, true).unwrap(), Outcome::Correct);
        assert_eq!(classify(&truth, &mk(vec![truth.clone()]), true).unwrap(), Outcome::Wrong);
    }

    #[test]
    fn report_rendering() {
        let report = ExperimentReport {
            name: "x".into(),
            replicates: 100,
            config: BTreeMap::new(),
            wall_time_secs: 0.0,
            table: ReportTable::Outcomes(vec![OutcomeRow {
                method: "ANM-linear".into(),
                study: "dataset2:lin1".into(),
                correct: 82,
                wrong: 0,
                undecided: 18,
                truncated: 0,
            }]),
        };
        assert!(report.to_markdown().contains("| ANM-linear | 82/0/18 |"));
        assert!(report.to_csv().contains("ANM-linear,dataset2:lin1,82,0,18,0,100"));
        assert!(report.curve_csv().is_none());
    }
}
