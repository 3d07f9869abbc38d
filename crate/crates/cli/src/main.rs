use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use phlrl::env::ScenarioConfig;
use phlrl::harness::{self, ControllerKind, EvalConfig, EvalMode, RunConfig};

#[derive(Parser)]
#[command(name = "phlrl", version, about = "Heterogeneous league training against a scripted opponent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the frontier policy group.
    Train(TrainArgs),
    /// Evaluate a checkpoint or a baseline controller.
    Evaluate(EvalArgs),
    /// Write a replay, either from a checkpoint or by re-emitting a recorded file.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallel: Option<usize>,
    #[arg(long)]
    iterations: Option<u64>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct Selection {
    #[arg(long, default_value = "pure")]
    mode: EvalMode,
    #[arg(long, default_value = "checkpoint")]
    controller: ControllerKind,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Run configuration whose scenario overrides the checkpoint's.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    sel: Selection,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value_t = 16)]
    parallel: usize,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    sel: Selection,
    /// Recorded replay to re-emit unchanged.
    #[arg(long, conflicts_with = "checkpoint")]
    input: Option<PathBuf>,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<Option<RunConfig>> {
    path.map(|p| RunConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(args.config.as_ref())?.unwrap_or_default();
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = args.out {
        cfg.output_dir = o;
    }
    if let Some(p) = args.parallel {
        cfg.parallel_envs = p;
    }
    if let Some(i) = args.iterations {
        cfg.iterations = i;
    }
    let summary = harness::train(cfg, args.resume)?;
    println!(
        "trained {} iterations ({} episodes); checkpoint {}; metrics {}",
        summary.iterations,
        summary.episodes,
        summary.checkpoint.display(),
        summary.metrics.display()
    );
    Ok(())
}

fn eval_config(sel: &Selection, episodes: usize, parallel: usize) -> EvalConfig {
    EvalConfig {
        mode: sel.mode,
        controller: sel.controller,
        episodes,
        seed: sel.seed,
        parallel,
    }
}

/// Scenario for baseline controllers: the config file's, else the checkpoint's, else the default.
fn baseline_scenario(sel: &Selection, cfg: Option<&RunConfig>) -> anyhow::Result<ScenarioConfig> {
    if let Some(c) = cfg {
        return Ok(c.scenario.clone());
    }
    match &sel.checkpoint {
        Some(dir) => Ok(harness::load_policies(dir)?.0.scenario),
        None => Ok(ScenarioConfig::default()),
    }
}

fn evaluate(args: EvalArgs) -> anyhow::Result<()> {
    let cfg = load_config(args.sel.config.as_ref())?;
    let episodes = args
        .episodes
        .unwrap_or_else(|| cfg.as_ref().map_or(RunConfig::default().eval_episodes, |c| c.eval_episodes));
    let ec = eval_config(&args.sel, episodes, args.parallel);
    let report = match (args.sel.controller, &args.sel.checkpoint) {
        (ControllerKind::Checkpoint, Some(dir)) => {
            harness::evaluate_checkpoint(dir, cfg.as_ref().map(|c| &c.scenario), &ec)?
        }
        (ControllerKind::Checkpoint, None) => {
            return Err(phlrl::Error::Config("--checkpoint is required for the checkpoint controller".into()).into())
        }
        _ => harness::evaluate(&baseline_scenario(&args.sel, cfg.as_ref())?, None, &ec)?,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn replay(args: ReplayArgs) -> anyhow::Result<()> {
    let mut out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if let Some(input) = &args.input {
        let f = File::open(input).with_context(|| format!("opening {}", input.display()))?;
        harness::replay_passthrough(BufReader::new(f), &mut out)?;
    } else {
        let cfg = load_config(args.sel.config.as_ref())?;
        let ec = eval_config(&args.sel, 1, 1);
        let rep = match (args.sel.controller, &args.sel.checkpoint) {
            (ControllerKind::Checkpoint, Some(dir)) => {
                harness::replay_checkpoint(dir, cfg.as_ref().map(|c| &c.scenario), &ec)?
            }
            (ControllerKind::Checkpoint, None) => {
                return Err(phlrl::Error::Config("replay needs --checkpoint or --input".into()).into())
            }
            _ => harness::replay_episode(&baseline_scenario(&args.sel, cfg.as_ref())?, None, &ec)?,
        };
        rep.write(&mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<phlrl::Error>()) {
        Some(phlrl::Error::Config(_)) => 2,
        Some(phlrl::Error::Divergence { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
