use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qps3vm::dataio::{load_libsvm, make_split, ParseOptions, Registry, RegistryEntry};
use qps3vm::harness::{run_experiment, verify, ExperimentConfig, ExperimentSummary, Method, Suite};
use qps3vm::kernels::{build_blocks_with_mode, GramMode};
use qps3vm::qp::{solve_qp, S3vmConfig};
use qps3vm::submodular::{lazy_greedy_maximize, SubmodularObjective};
use qps3vm::{Dataset, KernelSpec, SplitSpec};

#[derive(Parser)]
#[command(name = "qps3vm", version, about = "Semi-supervised SVM labeling by relaxation and greedy set selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on one dataset over repeated splits.
    Solve(SolveArgs),
    /// Sweep every available registry dataset with every method.
    Bench(BenchArgs),
    /// Run the property suites; exits non-zero if any check fails.
    Verify(VerifyArgs),
    /// Dump soft labels or the greedy selection trace for one split.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    All,
    Bound,
    Submodularity,
    Greedy,
    Equivalence,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// libsvm file (optionally .gz).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Registry file supplying path and defaults for --dataset.
    #[arg(long, default_value = "data/registry.txt")]
    registry: PathBuf,
    /// Dataset name to look up in the registry.
    #[arg(long)]
    dataset: Option<String>,
    /// Map multiclass labels to +1 (positive values) and -1 (everything else).
    #[arg(long)]
    binary_mapping: bool,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long = "C")]
    c: Option<f64>,
    #[arg(long = "Cstar")]
    c_star: Option<f64>,
    /// Positive fraction in U; defaults to the registry value, else the true fraction.
    #[arg(long)]
    r: Option<f64>,
    /// Number of labeled samples per split.
    #[arg(long)]
    labeled: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    splits: usize,
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelArg,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Kernel bound override for the linear kernel.
    #[arg(long)]
    d: Option<f64>,
    /// Largest |U| the relaxation solver accepts.
    #[arg(long = "k-cap", default_value_t = 3000)]
    k_cap: usize,
    /// Random starts for the relaxation solver.
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long)]
    parallel_splits: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "s-qp-s3vm")]
    method: String,
    /// Write per-split rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "data/registry.txt")]
    registry: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated methods.
    #[arg(long, default_value = "svm,qp-s3vm,s-qp-s3vm")]
    methods: String,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: SuiteArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// `qp-s3vm` dumps soft labels, `s-qp-s3vm` the selection.
    #[arg(long, default_value = "s-qp-s3vm")]
    method: String,
    /// Which split to inspect.
    #[arg(long, default_value_t = 0)]
    split: usize,
    /// Soft labels or selection as CSV (stdout when omitted).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Selection trace as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    ExitCode::from(exit_code(run(Cli::parse())))
}

fn run(cli: Cli) -> AnyResult<bool> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Verify(a) => run_verify(a),
        Command::Inspect(a) => inspect(a),
    }
}

/// 0 on success, 1 when a verification suite fails, 2 on any error.
fn exit_code(outcome: AnyResult<bool>) -> u8 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load(path: &Path, binary_mapping: bool) -> AnyResult<Dataset> {
    Ok(load_libsvm(path, ParseOptions { binary_mapping })?)
}

/// Resolves the dataset file and its registry defaults, if any.
fn resolve(args: &DataArgs) -> AnyResult<(String, Dataset, Option<RegistryEntry>)> {
    let entry = match &args.dataset {
        Some(name) => Some(Registry::load(&args.registry)?.get(name)?.clone()),
        None => None,
    };
    let path = match (&args.data, &entry) {
        (Some(p), _) => p.clone(),
        (None, Some(e)) => e.path.clone(),
        (None, None) => return Err("give --data or --dataset".into()),
    };
    let name = entry
        .as_ref()
        .map(|e| e.name.clone())
        .or_else(|| path.file_name().map(|f| f.to_string_lossy().into_owned()))
        .unwrap_or_default();
    Ok((name, load(&path, args.binary_mapping)?, entry))
}

fn kernel_spec(run: &RunArgs) -> AnyResult<KernelSpec> {
    let spec = match run.kernel {
        KernelArg::Linear => KernelSpec::linear(),
        KernelArg::Rbf => KernelSpec::rbf(run.gamma)?,
    };
    Ok(match run.d {
        Some(d) => spec.with_d_override(d)?,
        None => spec,
    })
}

fn experiment_config(name: &str, method: Method, run: &RunArgs, entry: Option<&RegistryEntry>) -> AnyResult<ExperimentConfig> {
    let c = run.c.or(entry.map(|e| e.c)).ok_or("--C is required without a registry entry")?;
    let c_star = run
        .c_star
        .or(entry.map(|e| e.c_star()))
        .ok_or("--Cstar is required without a registry entry")?;
    let labeled = run
        .labeled
        .or(entry.and_then(|e| e.n_labeled))
        .ok_or("--labeled is required without a registry entry")?;
    let mut cfg = ExperimentConfig::new(name, method, c, c_star, labeled);
    cfg.r = run.r.or(entry.map(|e| e.r));
    cfg.seed = run.seed;
    cfg.splits = run.splits;
    cfg.kernel = kernel_spec(run)?;
    cfg.qp_cap = run.k_cap;
    cfg.qp_restarts = run.restarts;
    cfg.parallel_splits = run.parallel_splits;
    Ok(cfg)
}

fn print_summary(s: &ExperimentSummary) {
    println!("{:<10} {:>8} {:>10} {:>10} {:>12}", "split", "|U|", "k", "acc %", "solver s");
    for r in &s.runs {
        println!(
            "{:<10} {:>8} {:>10} {:>10.3} {:>12.6}",
            r.split_seed,
            r.n_unlabeled,
            r.k.map_or("-".to_string(), |k| k.to_string()),
            r.accuracy,
            r.solver_seconds
        );
    }
    println!(
        "{} / {}: mean accuracy {:.3} (sd {:.3}), mean solver time {:.6} s, mean total {:.6} s",
        s.dataset, s.method, s.mean_accuracy, s.std_accuracy, s.mean_solver_seconds, s.mean_total_seconds
    );
}

fn solve(a: SolveArgs) -> AnyResult<bool> {
    let method: Method = a.method.parse()?;
    let (name, data, entry) = resolve(&a.data)?;
    let cfg = experiment_config(&name, method, &a.run, entry.as_ref())?;
    let summary = run_experiment(&data, &cfg)?;
    print_summary(&summary);
    if let Some(path) = a.csv {
        fs::write(path, summary.to_csv())?;
    }
    if let Some(path) = a.json {
        fs::write(path, serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(true)
}

fn bench(a: BenchArgs) -> AnyResult<bool> {
    let registry = Registry::load(&a.registry)?;
    let methods: Vec<Method> = a.methods.split(',').map(|m| m.trim().parse()).collect::<Result<_, _>>()?;
    let mut summaries = Vec::new();
    println!("{:<16} {:<10} {:>10} {:>10} {:>12}", "dataset", "method", "acc %", "sd", "solver s");
    for entry in &registry.entries {
        if !entry.path.exists() {
            println!("{:<16} skipped: {} not found", entry.name, entry.path.display());
            continue;
        }
        let data = load(&entry.path, true)?;
        for &method in &methods {
            let cfg = experiment_config(&entry.name, method, &a.run, Some(entry))?;
            match run_experiment(&data, &cfg) {
                Ok(s) => {
                    println!(
                        "{:<16} {:<10} {:>10.3} {:>10.3} {:>12.6}",
                        s.dataset, s.method, s.mean_accuracy, s.std_accuracy, s.mean_solver_seconds
                    );
                    summaries.push(s);
                }
                Err(e @ qps3vm::Error::CapExceeded { .. }) => {
                    println!("{:<16} {:<10} {:>10}   ({e})", entry.name, method, "-");
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if let Some(path) = a.csv {
        let mut out = String::new();
        for (i, s) in summaries.iter().enumerate() {
            let csv = s.to_csv();
            out.push_str(if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) });
        }
        fs::write(path, out)?;
    }
    if let Some(path) = a.json {
        fs::write(path, serde_json::to_string_pretty(&summaries)?)?;
    }
    Ok(true)
}

fn run_verify(a: VerifyArgs) -> AnyResult<bool> {
    let suite = match a.suite {
        SuiteArg::All => Suite::All,
        SuiteArg::Bound => Suite::Bound,
        SuiteArg::Submodularity => Suite::Submodularity,
        SuiteArg::Greedy => Suite::Greedy,
        SuiteArg::Equivalence => Suite::Equivalence,
    };
    let report = verify(suite, a.seed)?;
    for c in &report.checks {
        println!(
            "[{}] {}: {} samples over {} fixtures, max violation {:.3e}; {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.samples,
            c.fixtures,
            c.max_violation,
            c.detail
        );
    }
    let json = serde_json::to_string_pretty(&report)?;
    match a.json {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(report.passed)
}

fn inspect(a: InspectArgs) -> AnyResult<bool> {
    let method: Method = a.method.parse()?;
    let (name, data, entry) = resolve(&a.data)?;
    let cfg = experiment_config(&name, method, &a.run, entry.as_ref())?;
    let normalized = data.normalize_features();
    let split = make_split(&normalized, &SplitSpec::new(cfg.n_labeled, cfg.split_seed(a.split)))?;
    let r = cfg.r.unwrap_or_else(|| split.unlabeled_positive_ratio());
    let mut s3 = S3vmConfig::new(cfg.c, cfg.c_star, r)?;
    s3.restarts = cfg.qp_restarts;
    s3.seed = cfg.split_seed(a.split);
    let k = s3.cardinality(split.n_unlabeled())?;

    let (csv, json) = match method {
        Method::QpS3vm => {
            let blocks = build_blocks_with_mode(&split, &cfg.kernel, GramMode::Dense)?;
            let sol = solve_qp(&blocks, &s3)?;
            eprintln!("objective {:.9}, k = {k}, best restart {}", sol.objective, sol.restart);
            (sol.p.to_csv(), None)
        }
        Method::SQpS3vm => {
            let blocks = build_blocks_with_mode(&split, &cfg.kernel, GramMode::OnDemand)?;
            let out = lazy_greedy_maximize(&SubmodularObjective::new(&blocks, &s3), k)?;
            eprintln!("S = {:.9}, k = {k}, {} gain evaluations", out.value, out.evaluations);
            (out.to_csv(), Some(out.trace_json()))
        }
        Method::Svm => return Err("inspect supports qp-s3vm and s-qp-s3vm".into()),
    };
    match a.csv {
        Some(path) => fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    if let (Some(path), Some(json)) = (a.json, json) {
        fs::write(path, json)?;
    }
    Ok(true)
}
