use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anmdag::datagen::{self, Dataset2Variant, Instance, SemSpec};
use anmdag::discover::PruneTestSet;
use anmdag::experiments::{run_discovery_study, run_faithfulness_miss, ExperimentReport, Study};
use anmdag::indep::{fisher_z_partial_correlation, hsic_test, partial_correlation};
use anmdag::{discover, Dataset, DiscoveryConfig, HsicMethod, NodeSet, RegressorKind, TestConfig, Verdict};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anmdag", version, about = "Causal DAG discovery with additive noise models")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find every DAG whose fitted residuals are independent.
    Discover(DiscoverArgs),
    /// Sample a builtin model or a TOML model spec to CSV.
    Simulate(SimulateArgs),
    /// Run a replicated simulation study.
    Experiment(ExperimentArgs),
    /// HSIC independence test between two column groups.
    Hsic(HsicArgs),
    /// Fisher-z test of a (partial) correlation.
    Pcorr(PcorrArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Regressor {
    Linear,
    Gp,
}

impl From<Regressor> for RegressorKind {
    fn from(r: Regressor) -> Self {
        match r {
            Regressor::Linear => RegressorKind::Linear,
            Regressor::Gp => RegressorKind::GaussianProcess,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NullMethod {
    Gamma,
    Permutation,
}

impl From<NullMethod> for HsicMethod {
    fn from(m: NullMethod) -> Self {
        match m {
            NullMethod::Gamma => HsicMethod::Gamma,
            NullMethod::Permutation => HsicMethod::Permutation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PruneAgainst {
    Current,
    All,
}

#[derive(Args)]
struct TestArgs {
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = NullMethod::Gamma)]
    hsic_method: NullMethod,
    /// Permutations for the permutation null.
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TestArgs {
    fn config(&self) -> TestConfig {
        TestConfig {
            alpha: self.alpha,
            hsic_method: self.hsic_method.into(),
            permutations: self.permutations,
            seed: self.seed,
            ..TestConfig::default()
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    test: TestArgs,
    /// Report the minimal-edge DAGs when several fit.
    #[arg(long)]
    faithful_mode: bool,
    #[arg(long, default_value_t = 256)]
    max_branches: usize,
    #[arg(long, default_value_t = 5)]
    gp_starts: usize,
    #[arg(long, default_value_t = 200)]
    gp_max_iter: usize,
    /// Block the pruning test conditions on.
    #[arg(long, value_enum, default_value_t = PruneAgainst::Current)]
    prune_against: PruneAgainst,
}

impl SearchArgs {
    fn config(&self, regressor: Regressor) -> DiscoveryConfig {
        let mut c = DiscoveryConfig {
            regressor: regressor.into(),
            test: self.test.config(),
            faithful_mode: self.faithful_mode,
            max_branches: self.max_branches,
            prune_test_set: match self.prune_against {
                PruneAgainst::Current => PruneTestSet::Current,
                PruneAgainst::All => PruneTestSet::AllPredecessors,
            },
            ..DiscoveryConfig::default()
        };
        c.gp.starts = self.gp_starts;
        c.gp.max_iter = self.gp_max_iter;
        c
    }
}

#[derive(Args)]
struct DiscoverArgs {
    /// CSV with a header row of variable names.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Regressor::Linear)]
    regressor: Regressor,
    #[command(flatten)]
    search: SearchArgs,
    /// Output directory for result.json and the DOT files
    /// (default: `<input stem>_dags` next to the input).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// dataset1, dataset2:<lin1|lin2|nonlin1|nonlin2>, dataset3, dataset4 or dataset5.
    #[arg(required_unless_present = "spec", conflicts_with = "spec")]
    name: Option<String>,
    /// TOML model spec instead of a builtin.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(short, default_value_t = datagen::DEFAULT_SAMPLES)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV path; the true DAG is written next to it as `<stem>.dag.txt`.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// dataset1, dataset2:<variant>, dataset3, dataset4 or dataset5.
    name: String,
    /// Replicates (default: 100, or 20 with the GP regressor).
    #[arg(long)]
    reps: Option<usize>,
    /// Sample sizes for dataset1.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    sizes: Vec<usize>,
    /// Default: gp for the nonlinear Data Set 2 variants, linear otherwise.
    #[arg(long, value_enum)]
    regressor: Option<Regressor>,
    #[arg(short, default_value_t = datagen::DEFAULT_SAMPLES)]
    n: usize,
    #[command(flatten)]
    search: SearchArgs,
    /// Output directory for the CSV and markdown reports.
    #[arg(short, long, default_value = ".")]
    output: PathBuf,
}

#[derive(Args)]
struct HsicArgs {
    input: PathBuf,
    /// Comma-separated column names of the first block.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    #[command(flatten)]
    test: TestArgs,
}

#[derive(Args)]
struct PcorrArgs {
    input: PathBuf,
    #[arg(long)]
    i: String,
    #[arg(long)]
    j: String,
    /// Conditioning columns.
    #[arg(long, value_delimiter = ',')]
    given: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

const EXIT_TRUNCATED: u8 = 2;
const EXIT_MULTIPLE: u8 = 3;
const EXIT_NO_MODEL: u8 = 4;

fn main() -> ExitCode {
    // Usage errors exit 1; clap's own code 2 is reserved for a truncated search.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Discover(a) => cmd_discover(a),
        Command::Simulate(a) => cmd_simulate(a).map(|_| 0),
        Command::Experiment(a) => cmd_experiment(a).map(|_| 0),
        Command::Hsic(a) => cmd_hsic(a).map(|_| 0),
        Command::Pcorr(a) => cmd_pcorr(a).map(|_| 0),
    }
}

fn read_data(path: &Path) -> Result<Dataset<f64>> {
    Dataset::read_csv_path(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_discover(a: DiscoverArgs) -> Result<u8> {
    let data = read_data(&a.input)?;
    let config = a.search.config(a.regressor);
    let result = discover(&data, &config)?;
    let names = data.names();

    let out = a.output.unwrap_or_else(|| {
        let stem = a.input.file_stem().unwrap_or_default().to_string_lossy();
        a.input.with_file_name(format!("{stem}_dags"))
    });
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let json = serde_json::to_string_pretty(&result.to_json(names))?;
    fs::write(out.join("result.json"), json + "\n")?;
    for (k, g) in result.dags.iter().enumerate() {
        fs::write(out.join(format!("dag{}.dot", k + 1)), g.to_dot(names))?;
    }

    match result.verdict {
        Verdict::Unique => println!("Unique DAG"),
        Verdict::NoModel | Verdict::Multiple => println!("I do not know."),
    }
    for (k, g) in result.dags.iter().enumerate() {
        println!("DAG {} ({} edges):", k + 1, g.num_edges());
        print!("{}", indent(&g.to_edge_list(names)));
    }
    if let Some(min) = &result.minimal_edge_dags {
        println!("minimal-edge DAGs: {}", min.len());
        for g in min {
            print!("{}", indent(&g.to_edge_list(names)));
            println!();
        }
    }
    if result.truncated {
        eprintln!("warning: search stopped at --max-branches {}", config.max_branches);
    }
    eprintln!("results written to {}", out.display());
    Ok(if result.truncated {
        EXIT_TRUNCATED
    } else {
        match result.verdict {
            Verdict::Unique => 0,
            Verdict::Multiple => EXIT_MULTIPLE,
            Verdict::NoModel => EXIT_NO_MODEL,
        }
    })
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("  {l}\n")).collect()
}

fn builtin(name: &str, n: usize, seed: u64) -> Result<Instance> {
    Ok(match name {
        "dataset1" => datagen::dataset1(n, seed)?,
        _ => name.parse::<Study>()?.generate(n, seed)?,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let (data, dag) = match (&a.name, &a.spec) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec = SemSpec::from_toml(&text)?;
            let dag = spec.validate()?;
            (datagen::simulate(&spec, a.n, a.seed)?, dag)
        }
        (Some(name), None) => {
            let inst = builtin(name, a.n, a.seed)?;
            (inst.data, inst.dag)
        }
        (None, None) => bail!("give a builtin name or --spec"),
    };
    data.write_csv_path(&a.output)
        .with_context(|| format!("writing {}", a.output.display()))?;
    let stem = a.output.file_stem().unwrap_or_default().to_string_lossy();
    let dag_path = a.output.with_file_name(format!("{stem}.dag.txt"));
    fs::write(&dag_path, dag.to_edge_list(data.names()))?;
    eprintln!(
        "wrote {} rows x {} columns to {} and the true DAG to {}",
        data.num_samples(),
        data.num_vars(),
        a.output.display(),
        dag_path.display()
    );
    Ok(())
}

fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = report.name.replace(':', "_");
    fs::write(dir.join(format!("{stem}.csv")), report.to_csv())?;
    fs::write(dir.join(format!("{stem}.md")), report.to_markdown())?;
    if let Some(curve) = report.curve_csv() {
        fs::write(dir.join(format!("{stem}_curve.csv")), curve)?;
    }
    Ok(())
}

fn cmd_experiment(a: ExperimentArgs) -> Result<()> {
    let report = if a.name == "dataset1" {
        let reps = a.reps.unwrap_or(100);
        run_faithfulness_miss(&a.sizes, reps, a.search.test.alpha, a.search.test.seed)?
    } else {
        let study: Study = a.name.parse()?;
        let regressor = a.regressor.unwrap_or(match study {
            Study::Dataset2(Dataset2Variant::Nonlin1 | Dataset2Variant::Nonlin2) => Regressor::Gp,
            _ => Regressor::Linear,
        });
        let reps = a.reps.unwrap_or(match regressor {
            Regressor::Linear => 100,
            Regressor::Gp => 20,
        });
        let config = a.search.config(regressor);
        run_discovery_study(study, &config, reps, a.n, a.search.test.seed)?
    };
    write_report(&report, &a.output)?;
    print!("{}", report.to_markdown());
    eprintln!(
        "{} replicates in {:.1}s; reports in {}",
        report.replicates,
        report.wall_time_secs,
        a.output.display()
    );
    Ok(())
}

fn columns(data: &Dataset<f64>, names: &[String]) -> Result<NodeSet> {
    let mut set = NodeSet::empty();
    for name in names {
        set.insert(data.index_of(name)?);
    }
    Ok(set)
}

fn cmd_hsic(a: HsicArgs) -> Result<()> {
    let data = read_data(&a.input)?;
    let x = columns(&data, &a.x)?;
    let y = columns(&data, &a.y)?;
    if !x.is_disjoint(y) {
        bail!("--x and --y must not share columns");
    }
    let config = a.test.config();
    config.validate()?;
    let r = hsic_test(&data.block(x), &data.block(y), &config)?;
    println!("statistic {}", r.statistic);
    println!("p-value {}", fmt_p(r.p_value));
    println!("{}", if r.rejects(config.alpha) { "dependent" } else { "independent" });
    Ok(())
}

fn fmt_p(p: f64) -> String {
    if p != 0.0 && p < 1e-4 {
        format!("{p:.3e}")
    } else {
        p.to_string()
    }
}

fn cmd_pcorr(a: PcorrArgs) -> Result<()> {
    let data = read_data(&a.input)?;
    let i = data.index_of(&a.i)?;
    let j = data.index_of(&a.j)?;
    let s = columns(&data, &a.given)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        bail!("alpha must lie in (0, 1), got {}", a.alpha);
    }
    let r = partial_correlation(&data, i, j, s)?;
    let t = fisher_z_partial_correlation(&data, i, j, s)?;
    println!("partial correlation {r}");
    println!("z {}", t.statistic);
    println!("p-value {}", fmt_p(t.p_value));
    println!("{}", if t.rejects(a.alpha) { "nonzero" } else { "zero" });
    Ok(())
}
