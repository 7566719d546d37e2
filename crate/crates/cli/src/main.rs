//! `lumpband`: instance generation, PAC and regret runs, benchmark batches
//! and summaries.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use lumpband::harness::{
    determinism_hash, read_results, run_experiment, summarize, write_results, AlgorithmSpec, ExperimentConfig,
    InstanceSource, MetricsRow,
};
use lumpband::InstanceSpec;

#[derive(Parser)]
#[command(name = "lumpband", version, about = "Context-lumpable bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize an instance spec (every random part written explicitly).
    GenInstance {
        #[arg(long, alias = "config")]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a PAC learner and write one row per seed.
    Pac(PacArgs),
    /// Run a regret learner and write one row per (seed, checkpoint).
    Regret(RegretArgs),
    /// Run a batch of experiment configs into one CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate a results CSV over seeds (JSON on stdout or to --out).
    Summarize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gap_threshold: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Full experiment config; other run flags are then ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Seeds, comma separated or repeated.
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PacAlgo {
    Uniform,
    General,
    NaivePac,
    Lowrank,
}

#[derive(Args)]
struct PacArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "uniform")]
    algo: PacAlgo,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    step_cap: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegretAlgo {
    Uniform,
    Nonuniform,
    General,
    Ucb,
    Exp3,
    Lowrank,
}

#[derive(Args)]
struct RegretArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "uniform")]
    algo: RegretAlgo,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    #[arg(long)]
    confidence_scale: Option<f64>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    lumpband::Error::Config(msg.into()).into()
}

fn need<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| config_error(format!("missing --{flag} (or pass --config)")))
}

fn base_config(common: &Common, algorithm: AlgorithmSpec) -> anyhow::Result<ExperimentConfig> {
    let path = need(common.instance.clone(), "instance")?;
    let id = common.id.clone().unwrap_or_else(|| {
        path.file_stem().map_or_else(|| "cli".to_owned(), |s| s.to_string_lossy().into_owned())
    });
    Ok(ExperimentConfig {
        id,
        instance: InstanceSource::Path { path },
        algorithm,
        seeds: common.seeds.clone(),
        steps: None,
        checkpoints: None,
        checkpoint_every: None,
        output: None,
        scale: common.scale,
    })
}

fn pac_config(args: &PacArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &args.common.config {
        return Ok(ExperimentConfig::load(path)?);
    }
    let eps = need(args.eps, "eps")?;
    let delta = need(args.delta, "delta")?;
    let step_cap = args.step_cap;
    let algorithm = match args.algo {
        PacAlgo::Uniform => AlgorithmSpec::PacUniform { eps, delta, r: need(args.r, "r")?, step_cap },
        PacAlgo::General => AlgorithmSpec::PacGeneral { eps, delta, r: need(args.r, "r")?, step_cap },
        PacAlgo::NaivePac => AlgorithmSpec::NaivePac { eps, delta, step_cap },
        PacAlgo::Lowrank => AlgorithmSpec::LowrankPac {
            eps,
            delta,
            rank: need(args.common.rank, "rank")?,
            bound: need(args.common.bound, "bound")?,
            step_cap,
        },
    };
    base_config(&args.common, algorithm)
}

fn regret_config(args: &RegretArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &args.common.config {
        return Ok(ExperimentConfig::load(path)?);
    }
    let confidence_scale = args.confidence_scale;
    let algorithm = match args.algo {
        RegretAlgo::Uniform => AlgorithmSpec::Uniform { r: need(args.r, "r")?, confidence_scale },
        RegretAlgo::Nonuniform => AlgorithmSpec::Nonuniform { r: need(args.r, "r")?, confidence_scale },
        RegretAlgo::General => AlgorithmSpec::General { r: need(args.r, "r")?, confidence_scale },
        RegretAlgo::Ucb => AlgorithmSpec::Ucb { bonus: None },
        RegretAlgo::Exp3 => AlgorithmSpec::Exp3 { rate: None },
        RegretAlgo::Lowrank => AlgorithmSpec::Lowrank {
            rank: need(args.common.rank, "rank")?,
            bound: need(args.common.bound, "bound")?,
            confidence_scale,
        },
    };
    let mut cfg = base_config(&args.common, algorithm)?;
    cfg.steps = Some(need(args.steps, "steps")?);
    cfg.checkpoint_every = args.checkpoint_every;
    Ok(cfg)
}

fn emit(rows: &[MetricsRow], out: &Path) -> anyhow::Result<()> {
    write_results(rows, out).with_context(|| format!("writing {}", out.display()))?;
    say(&format!("rows={} hash={}", rows.len(), determinism_hash(rows)))
}

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
fn say(line: &str) -> anyhow::Result<()> {
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// A bench config is a JSON array of experiment configs, or an object with
/// an `experiments` array.
fn load_batch(path: &Path) -> anyhow::Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_error(format!("bench config: {e}")))?;
    let list = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut map) => match map.remove("experiments") {
            Some(serde_json::Value::Array(items)) => items,
            _ => return Err(config_error("bench config needs an `experiments` array")),
        },
        _ => return Err(config_error("bench config must be an array or an object")),
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    list.into_iter()
        .map(|item| {
            let mut cfg = ExperimentConfig::from_json(&item.to_string())?;
            if let InstanceSource::Path { path: p } = &mut cfg.instance {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
            Ok(cfg)
        })
        .collect()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenInstance { spec, out } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| config_error(format!("cannot read {}: {e}", spec.display())))?;
            let materialized = InstanceSpec::from_json(&text)?.materialize()?;
            std::fs::write(&out, materialized.to_json()? + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
        }
        Command::Pac(args) => {
            let cfg = pac_config(&args)?;
            if !cfg.algorithm.is_pac() {
                return Err(config_error(format!("`{}` is not a PAC algorithm", cfg.algorithm.id())));
            }
            emit(&run_experiment(&cfg)?, &args.common.out)?;
        }
        Command::Regret(args) => {
            let cfg = regret_config(&args)?;
            if cfg.algorithm.is_pac() {
                return Err(config_error(format!("`{}` is not a regret algorithm", cfg.algorithm.id())));
            }
            emit(&run_experiment(&cfg)?, &args.common.out)?;
        }
        Command::Bench { config, out } => {
            let batch = load_batch(&config)?;
            for cfg in &batch {
                cfg.validate()?;
            }
            let mut rows = Vec::new();
            for cfg in &batch {
                rows.extend(run_experiment(cfg)?);
            }
            emit(&rows, &out)?;
        }
        Command::Summarize { input, gap_threshold, out } => {
            let rows = read_results(&input).map_err(|e| config_error(format!("{}: {e}", input.display())))?;
            let json = serde_json::to_string_pretty(&summarize(&rows, gap_threshold))?;
            match out {
                Some(path) => std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
                None => say(&json)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<lumpband::Error>().map_or(3, lumpband::Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
