//! `rlhh` command line: generate instances, solve them with any selector,
//! sweep benchmarks, train the DDQN hyper-heuristic, and export traces.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use rlhh::agent::{load_model, save_model, train, Hyperparameters, QNetwork, TrainConfig, TrainingSet};
use rlhh::bench::{
    run_benchmark, summarize, trace_series_csv, write_benchmark_csv, write_summary_csv,
    BenchmarkRow, BASELINE_SELECTORS,
};
use rlhh::engine::{run_cg, CgConfig, EpisodeTrace, RewardMode};
use rlhh::instance::{generate_bdsp, load_instance, save_instance, Instance};

#[derive(Parser)]
#[command(name = "rlhh", about = "Column generation with learned network-reduction heuristics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random bus-driver scheduling instance.
    GenBdsp(GenBdspArgs),
    /// Solve one instance with one selector and report the result row.
    Solve(SolveArgs),
    /// Run instances × selectors and write row + summary CSVs.
    Bench(BenchArgs),
    /// Train the DDQN selector from a config file.
    Train(TrainArgs),
    /// Convert trace files into an aligned convergence CSV.
    TraceExport(TraceExportArgs),
}

#[derive(Args)]
struct GenBdspArgs {
    /// Number of trips.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct RunOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Episode time limit in seconds. Defaults to 600 for n ≤ 50 and 3600
    /// above.
    #[arg(long)]
    time_limit: Option<u64>,
    /// Record wall-clock timings in outputs (breaks byte-for-byte
    /// reproducibility of traces across machines).
    #[arg(long, default_value_t = false)]
    timing: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    /// be1|be2|be3|bn|bp|random|full|rlhh:<model path>
    #[arg(long)]
    selector: String,
    #[command(flatten)]
    run: RunOpts,
    /// Write the per-iteration trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files.
    #[arg(long, required = true, num_args = 1..)]
    instances: Vec<PathBuf>,
    /// Comma-separated selector names; rlhh requires --model.
    #[arg(long, default_value = "be1,be2,be3,bn,bp,random,full")]
    selectors: String,
    /// Trained model, enables the "rlhh" selector.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    run: RunOpts,
    /// Raw per-run rows.
    #[arg(long)]
    out: PathBuf,
    /// Per-(kind, n) summary rows.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// TOML training configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TraceExportArgs {
    /// Trace files produced by `solve`.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

/// Training configuration file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFileConfig {
    episodes: usize,
    #[serde(default)]
    seed: u64,
    /// Instance files used for episode sampling.
    instances: Vec<PathBuf>,
    /// Uniform episode size range [lo, hi]; omitted = full instances.
    n_range: Option<(usize, usize)>,
    model_out: PathBuf,
    /// Line-delimited episode log.
    log_out: Option<PathBuf>,
    #[serde(default)]
    hyper: Hyperparameters,
    /// Per-episode CG time limit in seconds.
    #[serde(default = "default_episode_secs")]
    episode_time_limit: u64,
    #[serde(default = "default_reward_mode")]
    reward_mode: RewardMode,
}

fn default_episode_secs() -> u64 {
    600
}

fn default_reward_mode() -> RewardMode {
    RewardMode::Inverse
}

fn default_time_limit(n: usize) -> Duration {
    if n <= 50 {
        Duration::from_secs(600)
    } else {
        Duration::from_secs(3600)
    }
}

fn cg_config(run: &RunOpts, n: usize) -> CgConfig {
    CgConfig {
        time_limit: run
            .time_limit
            .map(Duration::from_secs)
            .unwrap_or_else(|| default_time_limit(n)),
        seed: run.seed,
        record_timing: run.timing,
        ..CgConfig::default()
    }
}

/// "rlhh:<path>" loads the model and maps to the "rlhh" selector name.
fn resolve_selector(spec: &str, inst: &Instance) -> Result<(String, Option<QNetwork>)> {
    if let Some(path) = spec.strip_prefix("rlhh:") {
        let model = load_model(Path::new(path), Some(inst.kind()))
            .with_context(|| format!("loading model {path}"))?;
        return Ok(("rlhh".into(), Some(model)));
    }
    if spec == "rlhh" {
        bail!("selector 'rlhh' needs a model: use rlhh:<model path>");
    }
    if !BASELINE_SELECTORS.contains(&spec) {
        bail!("unknown selector '{spec}'");
    }
    Ok((spec.to_string(), None))
}

fn cmd_gen_bdsp(args: &GenBdspArgs) -> Result<()> {
    let inst = Instance::Bdsp(generate_bdsp(args.n, args.seed)?);
    save_instance(&inst, &args.out)?;
    println!("wrote {} ({} trips)", args.out.display(), args.n);
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> Result<()> {
    let inst = load_instance(&args.instance)
        .with_context(|| format!("loading {}", args.instance.display()))?;
    let (name, model) = resolve_selector(&args.selector, &inst)?;
    let cfg = cg_config(&args.run, inst.len());
    let mut selector = rlhh::bench::make_selector(&name, cfg.seed, model.as_ref())?;
    let out = run_cg(&inst, &cfg, selector.as_mut())?;
    if let Some(path) = &args.trace {
        fs::write(path, out.trace.to_json_lines()?)?;
    }
    let row = BenchmarkRow::from_outcome(&inst, &name, cfg.seed, &out);
    print!("{}", write_benchmark_csv(&[row])?);
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let selectors: Vec<String> = args
        .selectors
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if selectors.is_empty() {
        bail!("empty selector list");
    }
    let wants_rlhh = selectors.iter().any(|s| s == "rlhh");
    if wants_rlhh && args.model.is_none() {
        bail!("selector 'rlhh' needs --model");
    }
    let mut rows = Vec::new();
    for path in &args.instances {
        let inst =
            load_instance(path).with_context(|| format!("loading {}", path.display()))?;
        let model = match (&args.model, wants_rlhh) {
            (Some(p), true) => Some(load_model(p, Some(inst.kind()))?),
            _ => None,
        };
        let cfg = cg_config(&args.run, inst.len());
        rows.extend(run_benchmark(&inst, &cfg, &selectors, model.as_ref())?);
    }
    fs::write(&args.out, write_benchmark_csv(&rows)?)?;
    if let Some(path) = &args.summary {
        fs::write(path, write_summary_csv(&summarize(&rows, "rlhh"))?)?;
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    println!("wrote {} rows ({failed} failed) to {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: TrainFileConfig =
        toml::from_str(&text).with_context(|| "parsing training config")?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let instances: Vec<Instance> = cfg
        .instances
        .iter()
        .map(|p| load_instance(p).with_context(|| format!("loading {}", p.display())))
        .collect::<Result<_>>()?;
    if instances.is_empty() {
        bail!("training config lists no instances");
    }
    let set = TrainingSet { instances, n_range: cfg.n_range };
    let train_cfg = TrainConfig {
        episodes: cfg.episodes,
        seed: cfg.seed,
        hyper: cfg.hyper.clone(),
        cg: CgConfig {
            time_limit: Duration::from_secs(cfg.episode_time_limit),
            reward_mode: cfg.reward_mode,
            ..CgConfig::default()
        },
    };
    let mut log_lines = String::new();
    let (model, logs) = train(
        &set,
        &train_cfg,
        Some(&mut |log: &rlhh::agent::EpisodeLog| {
            eprintln!(
                "episode {} n={} eps={:.3} obj_int={:.2} gap={:.4}",
                log.episode, log.n, log.epsilon, log.objective_integer, log.gap
            );
        }),
    )?;
    for log in &logs {
        log_lines.push_str(&serde_json::to_string(log)?);
        log_lines.push('\n');
    }
    save_model(&model, &cfg.model_out)?;
    if let Some(path) = &cfg.log_out {
        fs::write(path, log_lines)?;
    }
    println!("trained {} episodes, model at {}", logs.len(), cfg.model_out.display());
    Ok(())
}

fn cmd_trace_export(args: &TraceExportArgs) -> Result<()> {
    let mut traces = Vec::new();
    for path in &args.traces {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let trace = EpisodeTrace::from_json_lines(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        traces.push((name, trace));
    }
    fs::write(&args.out, trace_series_csv(&traces)?)?;
    println!("wrote {} series to {}", traces.len(), args.out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::GenBdsp(args) => cmd_gen_bdsp(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Train(args) => cmd_train(args),
        Command::TraceExport(args) => cmd_trace_export(args),
    };
    if let Err(e) = result {
        // Machine-readable one-line error on stderr.
        eprintln!(
            "error: {}",
            serde_json::json!({ "message": format!("{e:#}") })
        );
        std::process::exit(1);
    }
}
