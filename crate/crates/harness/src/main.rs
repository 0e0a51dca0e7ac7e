//! `akfsr` — run training, adaptation, oracle-check, and stability-sweep
//! experiments from a TOML config with CLI overrides.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use akf_sr::ExplorationMode;
use akf_sr_harness::{
    episodes_to_threshold, oracle_check, replot, run_adaptation, run_experiment, stability_sweep,
    ExperimentConfig, ExperimentKind,
};

#[derive(Parser)]
#[command(name = "akfsr", about = "Successor-feature Kalman learning benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-run training campaign with CSV/JSON/SVG outputs.
    Train(RunArgs),
    /// Reward-change adaptation: frozen successor weights vs full relearn.
    Adapt(RunArgs),
    /// Train on the gridworld and compare with the closed-form occupancy
    /// matrix.
    OracleCheck(RunArgs),
    /// Steps-per-episode stability across basis widths.
    Sweep(RunArgs),
    /// Re-render the SVG charts from an existing output directory.
    Plot(PlotArgs),
    /// Run whatever experiment kind the config (or --mode) selects.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment id: pendulum, mountain-car, or gridworld.
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiment kind override: train, adapt, oracle-check, sweep.
    #[arg(long)]
    mode: Option<String>,
    /// Behavior policy: information, greedy, or epsilon:<value>.
    #[arg(long)]
    exploration: Option<String>,
    /// Gridworld definition file (JSON).
    #[arg(long)]
    gridworld: Option<PathBuf>,
    /// Comma-separated basis widths for the sweep.
    #[arg(long)]
    widths: Option<String>,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding episodes.csv.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_exploration(text: &str) -> Result<ExplorationMode> {
    if text == "information" {
        return Ok(ExplorationMode::Information);
    }
    if text == "greedy" {
        return Ok(ExplorationMode::Greedy);
    }
    if let Some(v) = text.strip_prefix("epsilon:") {
        return Ok(ExplorationMode::EpsilonGreedy(v.parse()?));
    }
    bail!("unknown exploration mode `{text}` (try information, greedy, epsilon:<v>)")
}

fn build_config(args: &RunArgs, kind: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = kind {
        cfg.kind = kind;
    }
    if let Some(mode) = &args.mode {
        cfg.kind = mode.parse()?;
    }
    if let Some(env) = &args.env {
        cfg.environment = env.clone();
    }
    if let Some(episodes) = args.episodes {
        cfg.episodes = episodes;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(seed) = args.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(path) = &args.gridworld {
        cfg.gridworld_file = Some(path.clone());
    }
    if let Some(widths) = &args.widths {
        cfg.sweep.widths = widths
            .split(',')
            .map(|w| w.trim().parse::<f64>().map_err(Into::into))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(expl) = &args.exploration {
        let mode = parse_exploration(expl)?;
        let mut agent = cfg.resolved_agent_config()?;
        agent.exploration = mode;
        cfg.agent = Some(agent);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.kind {
        ExperimentKind::Train => {
            let out = run_experiment(cfg)?;
            let window = 100.min(out.series.len());
            let tail: f64 = out.series.mean_return[out.series.len() - window..]
                .iter()
                .sum::<f64>()
                / window as f64;
            println!(
                "trained {} runs x {} episodes on {}; mean return over final {} episodes: {:.3}",
                cfg.runs, cfg.episodes, cfg.environment, window, tail
            );
            println!("outputs in {}", cfg.out_dir.display());
        }
        ExperimentKind::Adapt => {
            let out = run_adaptation(cfg)?;
            let mean_floor: f64 = out.floors.iter().sum::<f64>() / out.floors.len() as f64;
            let describe = |logs: &[akf_sr::TrainLog]| -> String {
                let mut hits = Vec::new();
                for (log, floor) in logs.iter().zip(&out.floors) {
                    match episodes_to_threshold(log, 1.2 * floor) {
                        Some(n) => hits.push(n as f64),
                        None => return "never within the run".into(),
                    }
                }
                format!("{:.1} episodes", hits.iter().sum::<f64>() / hits.len() as f64)
            };
            println!("pre-change loss floor (mean over runs): {mean_floor:.4}");
            println!("frozen-successor recovery to 1.2x floor: {}", describe(&out.adapted));
            println!("full-relearn recovery to 1.2x floor:    {}", describe(&out.control));
            println!("outputs in {}", cfg.out_dir.display());
        }
        ExperimentKind::OracleCheck => {
            let report = oracle_check(cfg)?;
            println!(
                "occupancy-matrix mse {:.6} (threshold {}): {}",
                report.mse,
                report.threshold,
                if report.pass { "PASS" } else { "FAIL" }
            );
            if !report.pass {
                bail!("oracle check failed");
            }
        }
        ExperimentKind::StabilitySweep => {
            let widths = cfg.sweep.widths.clone();
            let out = stability_sweep(cfg, &widths)?;
            for ws in &out {
                let n = ws.mean_steps.len();
                let window = 50.min(n);
                let tail = &ws.mean_steps[n - window..];
                let mean = tail.iter().sum::<f64>() / window as f64;
                let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / window as f64;
                println!(
                    "width {:>6}: final-{window} mean steps {:.2}, std {:.2}",
                    ws.width,
                    mean,
                    var.sqrt()
                );
            }
            println!("outputs in {}", cfg.out_dir.display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train(args) => dispatch(&build_config(&args, Some(ExperimentKind::Train))?),
        Command::Adapt(args) => dispatch(&build_config(&args, Some(ExperimentKind::Adapt))?),
        Command::OracleCheck(args) => {
            let mut cfg = build_config(&args, Some(ExperimentKind::OracleCheck))?;
            if args.env.is_none() && args.config.is_none() {
                cfg.environment = "gridworld".into();
            }
            if args.episodes.is_none() && args.config.is_none() {
                cfg.episodes = 300;
            }
            dispatch(&cfg)
        }
        Command::Sweep(args) => dispatch(&build_config(&args, Some(ExperimentKind::StabilitySweep))?),
        Command::Plot(args) => replot(&args.out),
        Command::Run(args) => dispatch(&build_config(&args, None)?),
    }
}
