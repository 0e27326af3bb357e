//! `rho`: plan allocations, run single trajectories and benchmark policies.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rho_core::bench::{self, svg, ExperimentConfig, Histogram, Mode, RecordFormat, RegretSummary};
use rho_core::planner::{solve_extended, LinearConstraint, Planner, PlanningObjective, Reward};
use rho_core::{BeliefState, MeasurementModel, PlannerConfig, PolicySpec};

#[derive(Parser)]
#[command(name = "rho", version, about = "Residual-horizon planning for batched experiments")]
struct Cli {
    /// Worker threads for replication-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the planning problem once for a given belief.
    Solve(SolveArgs),
    /// Run one trajectory and print it as JSON.
    Run(RunArgs),
    /// Run every configured policy over all replications.
    Bench(BenchArgs),
    /// Regret histograms across batch scalings, including the Gaussian limit.
    Hist(HistArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// JSON belief `{"mu": [...], "sigma2": [...]}`.
    #[arg(long)]
    belief: PathBuf,
    /// JSON measurement model `{"s2": [...], "batch_fracs": [...], "n": ...}`.
    /// Without it every arm has s² = 1.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Residual budget b̄; defaults to the model schedule's remainder from `--epoch`.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 0)]
    epoch: usize,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `simple-regret` or `top-k:K[:LAMBDA]`.
    #[arg(long, default_value = "simple-regret")]
    objective: Reward,
    /// `FILE:RBAR` where FILE holds a JSON array `r`; enforces rᵀρ ≤ RBAR.
    #[arg(long)]
    constraint: Option<String>,
}

#[derive(Args)]
struct Common {
    /// Experiment config (`.toml` or JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            cfg.replications = r;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Policy to run; defaults to the first one in the config.
    #[arg(long)]
    policy: Option<PolicySpec>,
    #[arg(long, default_value_t = 0)]
    replication: u64,
    /// Use the Gaussian sequential experiment instead of finite batches.
    #[arg(long)]
    limit: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory; falls back to the config's `output_dir`, then `bench-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value = "uniform")]
    baseline: String,
    #[arg(long)]
    limit: bool,
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    policy: Option<PolicySpec>,
    /// Batch scalings to compare against each other and against n = ∞.
    #[arg(long, value_delimiter = ',', default_values_t = [10u64, 100, 1000])]
    ns: Vec<u64>,
    #[arg(long, default_value_t = 30)]
    bins: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Hist(a) => hist(a),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn solve(a: SolveArgs) -> Result<()> {
    let belief: BeliefState = read_json(&a.belief)?;
    let belief = BeliefState::new(belief.mu().to_vec(), belief.sigma2().to_vec())?;
    let k = belief.num_arms();
    let model: Option<MeasurementModel> = a.model.as_deref().map(read_json).transpose()?;
    let s2 = match &model {
        Some(m) => MeasurementModel::new(m.s2.clone(), m.batch_fracs.clone(), m.n)?.s2,
        None => vec![1.0; k],
    };
    let budget = match (a.budget, &model) {
        (Some(b), _) => b,
        (None, Some(m)) => {
            if a.epoch >= m.batch_fracs.epochs() {
                bail!("epoch {} is past the schedule's {} epochs", a.epoch, m.batch_fracs.epochs());
            }
            m.batch_fracs.residual(a.epoch)
        }
        (None, None) => 1.0,
    };
    let mut cfg = PlannerConfig::default();
    if let Some(n) = a.samples {
        cfg.num_samples = n;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let mut objective = PlanningObjective {
        reward: a.objective,
        ..PlanningObjective::default()
    };
    if let Some(spec) = &a.constraint {
        let (file, rbar) = spec
            .rsplit_once(':')
            .context("--constraint expects FILE:RBAR")?;
        let r: Vec<f64> = read_json(Path::new(file))?;
        let rbar: f64 = rbar.parse().context("constraint bound is not a number")?;
        objective = objective.with_constraint(LinearConstraint::new(r, rbar)?);
    }
    let sol = if objective == PlanningObjective::default() {
        Planner::new(cfg, k)?.solve(&belief, budget, &s2)?
    } else {
        solve_extended(&belief, budget, &s2, &objective, &cfg)?
    };
    println!("{}", serde_json::to_string_pretty(&sol)?);
    Ok(())
}

fn pick_policy(cfg: &ExperimentConfig, requested: Option<PolicySpec>) -> Result<PolicySpec> {
    match requested {
        Some(p) => Ok(p),
        None => cfg
            .policies
            .first()
            .cloned()
            .context("config lists no policies"),
    }
}

fn run(a: RunArgs) -> Result<()> {
    let cfg = a.common.load()?;
    let policy = pick_policy(&cfg, a.policy)?;
    let mode = if a.limit { Mode::Limit } else { Mode::Finite };
    let traj = bench::run_replication(&cfg, &policy, a.replication, mode)?;
    println!("{}", serde_json::to_string_pretty(&traj)?);
    Ok(())
}

fn print_table(summaries: &[RegretSummary], baseline: &str) {
    println!(
        "{:<28} {:>6} {:>12} {:>10} {:>10} {:>8}",
        "policy", "reps", "mean", "se", format!("% {baseline}"), "± se"
    );
    for s in summaries {
        let rel = s.relative.map_or("undef".to_string(), |v| format!("{v:.1}"));
        let rel_se = s.relative_se.map_or("-".to_string(), |v| format!("{v:.1}"));
        println!(
            "{:<28} {:>6} {:>12.6} {:>10.6} {:>10} {:>8}",
            s.policy, s.replications, s.mean, s.se, rel, rel_se
        );
    }
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let cfg = a.common.load()?;
    let out_dir = a
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bench-out"));
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mode = if a.limit { Mode::Limit } else { Mode::Finite };
    let output = bench::run_benchmark_mode(&cfg, mode)?;

    let (name, format) = match a.format {
        Format::Csv => ("records.csv", RecordFormat::Csv),
        Format::Json => ("records.json", RecordFormat::Json),
    };
    bench::write_records(&output.records, &out_dir.join(name), format)?;
    let summaries = bench::relative_gain(&output.records, &a.baseline)?;
    let summary = serde_json::json!({
        "baseline": a.baseline,
        "summaries": summaries,
        "best_se": output.best_se,
        "profiles": output.profiles,
        "failures": output.failures,
    });
    write_file(&out_dir.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    let title = format!("Simple regret relative to {} (%)", a.baseline);
    write_file(&out_dir.join("relative_regret.svg"), &svg::bar_chart(&title, &summaries))?;

    print_table(&summaries, &a.baseline);
    if let Some(best) = &output.best_se {
        println!("best successive elimination: {best}");
    }
    if !output.failures.is_empty() {
        eprintln!("{} trial(s) failed; see summary.json", output.failures.len());
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn hist(a: HistArgs) -> Result<()> {
    let base = a.common.load()?;
    let policy = pick_policy(&base, a.policy)?;
    if a.ns.is_empty() || a.ns.contains(&0) {
        bail!("--ns needs positive batch scalings");
    }
    let b0 = base.schedule()?.batch(0);
    let at = |n: u64| -> ExperimentConfig {
        let mut cfg = base.clone();
        cfg.n = n;
        cfg.environment = cfg.environment.with_batch_units(b0 * n as f64);
        cfg.policies = vec![policy.clone()];
        cfg.se_grid = None;
        cfg
    };
    let local_regret = |cfg: &ExperimentConfig, mode: Mode| -> Result<Vec<f64>> {
        let out = bench::run_benchmark_mode(cfg, mode)?;
        if !out.failures.is_empty() {
            bail!("{} trial(s) failed: {}", out.failures.len(), out.failures[0].error);
        }
        let root = (cfg.n as f64).sqrt();
        Ok(out.records.iter().map(|r| root * r.regret).collect())
    };

    let mut samples: Vec<(String, Vec<f64>)> = Vec::new();
    for &n in &a.ns {
        samples.push((format!("n={n}"), local_regret(&at(n), Mode::Finite)?));
    }
    let n_max = *a.ns.iter().max().expect("ns is nonempty");
    samples.push(("n=inf".to_string(), local_regret(&at(n_max), Mode::Limit)?));

    let series: Vec<(String, Histogram)> = samples
        .iter()
        .map(|(l, v)| Ok((l.clone(), bench::regret_histogram(v, a.bins)?)))
        .collect::<Result<_>>()?;
    let limit = &samples.last().expect("limit pushed").1;
    println!("{:<10} {:>12} {:>10}", "scaling", "mean √n·r", "KS vs inf");
    for (label, v) in &samples {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        println!("{label:<10} {mean:>12.5} {:>10.4}", bench::ks_distance(v, limit));
    }

    if let Some(dir) = a.out.or(base.output_dir.clone()) {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let json: Vec<_> = series
            .iter()
            .map(|(l, h)| serde_json::json!({"scaling": l, "edges": h.edges, "counts": h.counts}))
            .collect();
        write_file(&dir.join("histograms.json"), &serde_json::to_string_pretty(&json)?)?;
        let title = format!("Simple regret (√n scale), {policy}");
        write_file(&dir.join("histograms.svg"), &svg::histogram_chart(&title, &series))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
