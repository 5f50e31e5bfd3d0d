use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};
use log::{info, warn};

use highway_core::attacker::{train_attacker_repeats, NetworkAttacker};
use highway_core::av::{train_av, FrozenAv};
use highway_core::harness::curve::write_csv;
use highway_core::harness::{evaluate, EvalSetup, ExperimentConfig, FcHistogram, Report};
use highway_core::rl::Checkpoint;

#[derive(Parser)]
#[command(name = "highway", version, about = "Train and evaluate an AV and an adversarial vehicle on a highway")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the AV in traffic without an attacker.
    TrainAv(TrainAvArgs),
    /// Train an attacker against a frozen AV checkpoint.
    TrainAttacker(TrainAttackerArgs),
    /// Evaluate the AV, optionally against an attacker, into crash histograms.
    Evaluate(EvaluateArgs),
    /// Render histograms as a crash table.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML). Defaults apply without one.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    no_safety_check: bool,
}

#[derive(Args)]
struct TrainAvArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, value_name = "N")]
    env_cars: Option<usize>,
}

#[derive(Args)]
struct TrainAttackerArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "PATH")]
    av_checkpoint: PathBuf,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, value_name = "N")]
    env_cars: Option<usize>,
    /// Independent trainings with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    repeats: u32,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_name = "PATH")]
    av_checkpoint: PathBuf,
    #[arg(long, value_name = "PATH")]
    attacker_checkpoint: Option<PathBuf>,
    /// Evaluate with the attacker (needs --attacker-checkpoint).
    #[arg(long)]
    with_attacker: bool,
    #[arg(long)]
    episodes: Option<usize>,
    /// One evaluation per car count.
    #[arg(long, value_name = "N", num_args = 1..)]
    env_cars: Vec<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also write traces of episodes without a crash.
    #[arg(long)]
    trace_all: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Histogram files written by `evaluate`.
    #[arg(required = true, value_name = "HISTOGRAM")]
    histograms: Vec<PathBuf>,
    /// Add the failure-code-0 column.
    #[arg(long)]
    extended: bool,
    /// Also write the table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

/// Loads the configuration and applies the shared overrides. A missing or
/// invalid file is a usage error.
fn load_config(common: &Common) -> ExperimentConfig {
    let mut cfg = match &common.config {
        None => ExperimentConfig::default(),
        Some(path) => {
            if !path.is_file() {
                usage_error(&format!("config file {} does not exist", path.display()));
            }
            ExperimentConfig::load(path).unwrap_or_else(|e| usage_error(&e.to_string()))
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if common.no_safety_check {
        cfg.safety_check = false;
    }
    cfg
}

fn usage_error(msg: &str) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, msg).exit()
}

fn load_checkpoint(path: &Path, agent: &str) -> Result<Checkpoint> {
    if !path.is_file() {
        bail!("{agent} checkpoint {} does not exist", path.display());
    }
    Checkpoint::load(path).with_context(|| format!("loading {agent} checkpoint {}", path.display()))
}

fn check_hash(ck: &Checkpoint, cfg: &ExperimentConfig, path: &Path) {
    if ck.meta.config_hash != cfg.config_hash() {
        warn!("{} was trained under a different configuration", path.display());
    }
}

fn train_av_cmd(args: TrainAvArgs) -> Result<()> {
    let mut cfg = load_config(&args.common);
    if let Some(e) = args.episodes {
        cfg.av_train.episodes = e;
    }
    if let Some(n) = args.env_cars {
        cfg.n_env_cars = n;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let setup = cfg.av_setup();
    info!("training AV for {} episodes", setup.train.episodes);
    let out = train_av::<f64>(&setup)?;
    let ck = Checkpoint::from_network(&out.network, "av", out.scaling.clone(), setup.train.clone(), cfg.config_hash());
    let ck_path = cfg.out_dir.join("av.ckpt");
    ck.save(&ck_path)?;
    write_csv(&cfg.out_dir.join("av_curve.csv"), &out.curve)?;
    info!("training crashes by failure code: {:?}", out.failure_codes);
    println!("{}", ck_path.display());
    Ok(())
}

fn train_attacker_cmd(args: TrainAttackerArgs) -> Result<()> {
    let mut cfg = load_config(&args.common);
    if let Some(e) = args.episodes {
        cfg.attacker_train.episodes = e;
    }
    if let Some(n) = args.env_cars {
        cfg.n_env_cars = n;
    }
    let av_ck = load_checkpoint(&args.av_checkpoint, "AV")?;
    check_hash(&av_ck, &cfg, &args.av_checkpoint);
    let av = FrozenAv::from_checkpoint(&av_ck, cfg.safety_check)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let setup = cfg.attacker_setup();
    let (runs, aggregate) = train_attacker_repeats::<f64>(&setup, &av, args.repeats as usize)?;
    let mut best = 0;
    for (r, run) in runs.iter().enumerate() {
        let mut train = setup.train.clone();
        train.seed = setup.train.seed.wrapping_add(r as u64);
        let ck = Checkpoint::from_network(&run.network, "attacker", run.scaling.clone(), train, cfg.config_hash());
        ck.save(&cfg.out_dir.join(format!("attacker_r{r}.ckpt")))?;
        write_csv(&cfg.out_dir.join(format!("attacker_curve_r{r}.csv")), &run.curve)?;
        info!("repeat {r}: training crashes by failure code {:?}", run.failure_codes);
        let last = |i: usize| runs[i].curve.last().map_or(f64::NEG_INFINITY, |p| p.mean);
        if last(r) > last(best) {
            best = r;
        }
    }
    write_csv(&cfg.out_dir.join("attacker_curve.csv"), &aggregate)?;
    let ck_path = cfg.out_dir.join("attacker.ckpt");
    std::fs::copy(cfg.out_dir.join(format!("attacker_r{best}.ckpt")), &ck_path)?;
    info!("repeat {best} has the best final evaluation return");
    println!("{}", ck_path.display());
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<()> {
    let mut cfg = load_config(&args.common);
    if let Some(e) = args.episodes {
        cfg.n_eval_episodes = e;
    }
    if args.with_attacker {
        cfg.with_attacker = true;
    }
    if cfg.with_attacker && args.attacker_checkpoint.is_none() {
        usage_error("evaluating with the attacker needs --attacker-checkpoint");
    }
    let av_ck = load_checkpoint(&args.av_checkpoint, "AV")?;
    check_hash(&av_ck, &cfg, &args.av_checkpoint);
    let av = FrozenAv::from_checkpoint(&av_ck, cfg.safety_check)?;
    let attacker = match (&args.attacker_checkpoint, cfg.with_attacker) {
        (Some(p), true) => Some(NetworkAttacker::from_checkpoint(&load_checkpoint(p, "attacker")?)?),
        _ => None,
    };
    let car_counts = if args.env_cars.is_empty() { vec![cfg.n_env_cars] } else { args.env_cars.clone() };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let label = if cfg.with_attacker { "with" } else { "without" };
    for cars in car_counts {
        let setup = EvalSetup {
            sim: cfg.sim,
            reward: cfg.reward,
            n_env_cars: cars,
            episodes: cfg.n_eval_episodes,
            step_limit: cfg.attacker_train.steps_per_episode,
            seed: cfg.seed,
            config_hash: cfg.config_hash(),
            workers: args.workers,
            trace_dir: Some(cfg.out_dir.join(format!("traces_{label}_{cars}"))),
            trace_all: args.trace_all,
        };
        let out = evaluate(&setup, &av, attacker.as_ref().map(|a| a as _))?;
        let path = cfg.out_dir.join(format!("histogram_{label}_{cars}.json"));
        out.histogram.save(&path)?;
        info!(
            "{cars} cars {label} attacker: {} crashes in {} episodes, codes {:?}",
            out.histogram.total_crashes, out.histogram.episodes, out.histogram.counts
        );
        println!("{}", path.display());
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<()> {
    let hists = args
        .histograms
        .iter()
        .map(|p| FcHistogram::load(p))
        .collect::<highway_core::Result<Vec<_>>>()?;
    let report = Report::from_histograms(&hists, args.extended)?;
    if let Some(p) = &args.csv {
        std::fs::write(p, report.to_csv())?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::TrainAv(a) => train_av_cmd(a),
        Command::TrainAttacker(a) => train_attacker_cmd(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Report(a) => report_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
