//! Experiment harness: configuration, multi-run campaigns, aggregation, and
//! file outputs (CSV, JSON, SVG).
//!
//! Runs are independent seeded agents; parallelism is across runs only and
//! results are reduced in run-index order, so outputs do not depend on the
//! degree of parallelism. `AKFSR_THREADS` caps the worker count.

pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use akf_sr::{
    gridworld_sr_oracle, Agent, AgentConfig, Env, FeatureConfig, Gridworld, GridworldDef,
    MountainCar, Pendulum, ScaledRewardEnv, TrainLog,
};

/// Hard cap on the squared feature length; beyond this the successor filter
/// cost is no longer desk-scale and the harness refuses to run.
pub const MAX_L_SQUARED: usize = 65_536;

const AGENT_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// What a campaign does.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Train,
    Adapt,
    OracleCheck,
    StabilitySweep,
}

impl std::str::FromStr for ExperimentKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "adapt" => Ok(Self::Adapt),
            "oracle-check" => Ok(Self::OracleCheck),
            "sweep" | "stability-sweep" => Ok(Self::StabilitySweep),
            other => bail!("unknown experiment kind `{other}`"),
        }
    }
}

/// Settings for the reward-change adaptation experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptSettings {
    /// Factor applied to every reward after the change.
    pub reward_scale: f64,
    /// Episodes of ordinary training before the change.
    pub pretrain_episodes: usize,
    /// Episodes after the change.
    pub adapt_episodes: usize,
    /// Freeze the successor weights and basis functions after the change so
    /// only the reward weights relearn.
    pub freeze_sr: bool,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self {
            reward_scale: 3.0,
            pretrain_episodes: 300,
            adapt_episodes: 100,
            freeze_sr: true,
        }
    }
}

/// Settings for the basis-width stability sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSettings {
    /// Isotropic covariance scales to sweep.
    pub widths: Vec<f64>,
    pub episodes: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            widths: vec![0.5, 1.0, 2.0],
            episodes: 200,
        }
    }
}

/// One experiment: environment, agent, campaign shape, outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// `pendulum`, `mountain-car`, or `gridworld`.
    pub environment: String,
    /// Gridworld definition file (JSON); a built-in five-state cyclic chain
    /// is used when absent.
    pub gridworld_file: Option<PathBuf>,
    pub episodes: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    /// Agent settings; environment-specific defaults apply when absent.
    pub agent: Option<AgentConfig>,
    pub adapt: AdaptSettings,
    pub sweep: SweepSettings,
    /// Give every run the same seed instead of `base_seed + run`. Intended
    /// for determinism checks.
    pub force_same_seed: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Train,
            environment: "pendulum".into(),
            gridworld_file: None,
            episodes: 1000,
            runs: 50,
            base_seed: 0,
            out_dir: PathBuf::from("out"),
            agent: None,
            adapt: AdaptSettings::default(),
            sweep: SweepSettings::default(),
            force_same_seed: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            bail!("invalid config: runs must be at least 1");
        }
        if self.episodes == 0 {
            bail!("invalid config: episodes must be at least 1");
        }
        match self.environment.as_str() {
            "pendulum" | "mountain-car" | "gridworld" => {}
            other => bail!("invalid config: unknown environment `{other}`"),
        }
        Ok(())
    }

    /// Seed of run `idx` under the per-run seeding rule.
    pub fn run_seed(&self, idx: usize) -> u64 {
        if self.force_same_seed {
            self.base_seed
        } else {
            self.base_seed.wrapping_add(idx as u64)
        }
    }

    /// The gridworld definition this config refers to.
    pub fn gridworld_def(&self) -> Result<GridworldDef> {
        match &self.gridworld_file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading gridworld {}", path.display()))?;
                let def: GridworldDef =
                    serde_json::from_str(&text).context("parsing gridworld definition")?;
                Ok(def)
            }
            None => Ok(GridworldDef::cyclic_chain(5, 25)),
        }
    }

    /// Agent settings, falling back to the per-environment defaults.
    pub fn resolved_agent_config(&self) -> Result<AgentConfig> {
        if let Some(cfg) = &self.agent {
            return Ok(cfg.clone());
        }
        Ok(match self.environment.as_str() {
            "pendulum" => AgentConfig::pendulum_default(),
            "mountain-car" => AgentConfig::mountain_car_default(),
            "gridworld" => {
                let def = self.gridworld_def()?;
                AgentConfig::gridworld_default(def.n_states, def.n_actions, 0.9)
            }
            other => bail!("unknown environment `{other}`"),
        })
    }

    /// Builds the environment for one run.
    pub fn build_env(&self, seed: u64) -> Result<Box<dyn Env>> {
        Ok(match self.environment.as_str() {
            "pendulum" => Box::new(Pendulum::new(seed, false)),
            "mountain-car" => Box::new(MountainCar::new(seed)),
            "gridworld" => Box::new(Gridworld::new(self.gridworld_def()?)?),
            other => bail!("unknown environment `{other}`"),
        })
    }
}

/// Per-episode statistics across runs: mean and population standard
/// deviation of returns, plus mean losses.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateSeries {
    pub mean_return: Vec<f64>,
    pub std_return: Vec<f64>,
    pub reward_mse: Vec<f64>,
    pub sr_mse: Vec<f64>,
    pub q_loss: Vec<f64>,
}

impl AggregateSeries {
    pub fn len(&self) -> usize {
        self.mean_return.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_return.is_empty()
    }
}

/// Elementwise mean and population standard deviation over equal-length run
/// logs.
pub fn aggregate_runs(logs: &[TrainLog]) -> Result<AggregateSeries> {
    if logs.is_empty() {
        bail!("no runs to aggregate");
    }
    let n_episodes = logs[0].len();
    if logs.iter().any(|l| l.len() != n_episodes) {
        bail!("ragged run logs: all runs must have the same episode count");
    }
    let n_runs = logs.len() as f64;
    let mut series = AggregateSeries {
        mean_return: vec![0.0; n_episodes],
        std_return: vec![0.0; n_episodes],
        reward_mse: vec![0.0; n_episodes],
        sr_mse: vec![0.0; n_episodes],
        q_loss: vec![0.0; n_episodes],
    };
    for e in 0..n_episodes {
        let mut mean = 0.0;
        for log in logs {
            mean += log[e].episode_return;
        }
        mean /= n_runs;
        let mut var = 0.0;
        for log in logs {
            let d = log[e].episode_return - mean;
            var += d * d;
        }
        series.mean_return[e] = mean;
        series.std_return[e] = (var / n_runs).sqrt();
        series.reward_mse[e] = logs.iter().map(|l| l[e].reward_mse).sum::<f64>() / n_runs;
        series.sr_mse[e] = logs.iter().map(|l| l[e].sr_mse).sum::<f64>() / n_runs;
        series.q_loss[e] = logs.iter().map(|l| l[e].q_loss).sum::<f64>() / n_runs;
    }
    Ok(series)
}

/// Per-episode `(reward_mse, sr_mse, q_loss)` of a single run.
pub fn compute_losses(log: &TrainLog) -> Vec<(f64, f64, f64)> {
    log.iter()
        .map(|e| (e.reward_mse, e.sr_mse, e.q_loss))
        .collect()
}

/// Output of a training campaign.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub series: AggregateSeries,
    pub logs: Vec<TrainLog>,
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = std::env::var("AKFSR_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building worker pool")
}

fn check_feature_budget(agent_cfg: &AgentConfig) -> Result<()> {
    let map = agent_cfg.features.build().context("building features")?;
    let l = map.feature_len() * agent_cfg.n_actions;
    if l * l > MAX_L_SQUARED {
        bail!(
            "refusing configuration: feature length {l} gives a {}-entry covariance (cap {})",
            l * l,
            MAX_L_SQUARED
        );
    }
    Ok(())
}

/// Trains one seeded agent for the configured number of episodes.
pub fn run_single(cfg: &ExperimentConfig, run_idx: usize) -> Result<TrainLog> {
    let agent_cfg = cfg.resolved_agent_config()?;
    let seed = cfg.run_seed(run_idx);
    let mut env = cfg.build_env(seed)?;
    let mut agent = Agent::new(&agent_cfg, seed ^ AGENT_SEED_SALT)?;
    Ok(agent.train(env.as_mut(), cfg.episodes)?)
}

/// Runs `cfg.runs` independent seeded agents, aggregates the logs, and
/// persists all outputs under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    check_feature_budget(&cfg.resolved_agent_config()?)?;
    let started = Instant::now();

    let pool = thread_pool()?;
    let logs: Vec<TrainLog> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|idx| run_single(cfg, idx))
            .collect::<Result<Vec<_>>>()
    })?;

    let series = aggregate_runs(&logs)?;
    emit_outputs(
        &series,
        &logs,
        &cfg.out_dir,
        &SummaryInfo {
            config: cfg,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    )?;
    Ok(ExperimentOutput { series, logs })
}

/// Context for `summary.json`.
pub struct SummaryInfo<'a> {
    pub config: &'a ExperimentConfig,
    pub wall_clock_seconds: f64,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    n_runs: usize,
    n_episodes: usize,
    final_window: usize,
    final_mean_return: f64,
    final_mean_reward_mse: f64,
    final_mean_sr_mse: f64,
    final_mean_q_loss: f64,
    wall_clock_seconds: f64,
}

fn tail_mean(values: &[f64], window: usize) -> f64 {
    let start = values.len().saturating_sub(window);
    let tail = &values[start..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Nine significant digits, scientific notation.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes `episodes.csv`, `summary.json`, `runs.json`, `returns.svg`, and
/// `losses.svg`. Returns the written paths.
pub fn emit_outputs(
    series: &AggregateSeries,
    logs: &[TrainLog],
    dir: &Path,
    info: &SummaryInfo,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();

    let csv_path = dir.join("episodes.csv");
    let mut csv = String::from("episode,mean_return,std_return,reward_mse,sr_mse,q_loss\n");
    for e in 0..series.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e + 1,
            sig9(series.mean_return[e]),
            sig9(series.std_return[e]),
            sig9(series.reward_mse[e]),
            sig9(series.sr_mse[e]),
            sig9(series.q_loss[e]),
        ));
    }
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    written.push(csv_path);

    let window = 100.min(series.len());
    let summary = Summary {
        config: info.config,
        n_runs: logs.len(),
        n_episodes: series.len(),
        final_window: window,
        final_mean_return: tail_mean(&series.mean_return, window),
        final_mean_reward_mse: tail_mean(&series.reward_mse, window),
        final_mean_sr_mse: tail_mean(&series.sr_mse, window),
        final_mean_q_loss: tail_mean(&series.q_loss, window),
        wall_clock_seconds: info.wall_clock_seconds,
    };
    let summary_path = dir.join("summary.json");
    fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)
        .with_context(|| format!("writing {}", summary_path.display()))?;
    written.push(summary_path);

    let runs_path = dir.join("runs.json");
    fs::write(&runs_path, serde_json::to_string(&logs)?)
        .with_context(|| format!("writing {}", runs_path.display()))?;
    written.push(runs_path);

    let returns_path = dir.join("returns.svg");
    fs::write(
        &returns_path,
        svg::line_chart(
            "Episode returns",
            "episode",
            "return",
            &[svg::Series {
                label: "mean return".into(),
                color: svg::PALETTE[0],
                values: &series.mean_return,
                band: Some(&series.std_return),
            }],
        ),
    )?;
    written.push(returns_path);

    let losses_path = dir.join("losses.svg");
    fs::write(
        &losses_path,
        svg::line_chart(
            "Model losses",
            "episode",
            "loss",
            &[
                svg::Series {
                    label: "reward mse".into(),
                    color: svg::PALETTE[0],
                    values: &series.reward_mse,
                    band: None,
                },
                svg::Series {
                    label: "sr mse".into(),
                    color: svg::PALETTE[1],
                    values: &series.sr_mse,
                    band: None,
                },
                svg::Series {
                    label: "q loss".into(),
                    color: svg::PALETTE[2],
                    values: &series.q_loss,
                    band: None,
                },
            ],
        ),
    )?;
    written.push(losses_path);

    Ok(written)
}

/// One width's aggregate of the stability sweep.
#[derive(Debug, Clone, Serialize)]
pub struct WidthSeries {
    pub width: f64,
    pub mean_steps: Vec<f64>,
    pub std_steps: Vec<f64>,
}

fn with_sigma_scale(cfg: &AgentConfig, width: f64) -> Result<AgentConfig> {
    let mut out = cfg.clone();
    out.features = match &cfg.features {
        FeatureConfig::RbfExplicit {
            centers,
            include_bias,
            ..
        } => FeatureConfig::RbfExplicit {
            centers: centers.clone(),
            sigma_scale: width,
            include_bias: *include_bias,
        },
        FeatureConfig::RbfGrid {
            ranges,
            order,
            include_bias,
            ..
        } => FeatureConfig::RbfGrid {
            ranges: ranges.clone(),
            order: *order,
            include_bias: *include_bias,
            sigma_scale: Some(width),
        },
        FeatureConfig::RbfFull {
            centers,
            covariances,
            include_bias,
        } => FeatureConfig::RbfFull {
            centers: centers.clone(),
            covariances: covariances
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|row| row.iter().map(|v| v * width).collect())
                        .collect()
                })
                .collect(),
            include_bias: *include_bias,
        },
        FeatureConfig::OneHot { .. } => {
            bail!("stability sweep needs RBF features")
        }
    };
    Ok(out)
}

/// Steps-per-episode aggregates for each basis width, persisted as
/// `sweep.csv` and `sweep.svg`.
pub fn stability_sweep(cfg: &ExperimentConfig, widths: &[f64]) -> Result<Vec<WidthSeries>> {
    cfg.validate()?;
    let base_agent = cfg.resolved_agent_config()?;
    let episodes = cfg.sweep.episodes;
    let pool = thread_pool()?;

    let mut out = Vec::with_capacity(widths.len());
    for &width in widths {
        let agent_cfg = with_sigma_scale(&base_agent, width)?;
        check_feature_budget(&agent_cfg)?;
        let logs: Vec<TrainLog> = pool.install(|| {
            (0..cfg.runs)
                .into_par_iter()
                .map(|idx| -> Result<TrainLog> {
                    let seed = cfg.run_seed(idx);
                    let mut env = cfg.build_env(seed)?;
                    let mut agent = Agent::new(&agent_cfg, seed ^ AGENT_SEED_SALT)?;
                    Ok(agent.train(env.as_mut(), episodes)?)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let n_runs = logs.len() as f64;
        let mut mean_steps = vec![0.0; episodes];
        let mut std_steps = vec![0.0; episodes];
        for e in 0..episodes {
            let mean = logs.iter().map(|l| l[e].steps as f64).sum::<f64>() / n_runs;
            let var = logs
                .iter()
                .map(|l| {
                    let d = l[e].steps as f64 - mean;
                    d * d
                })
                .sum::<f64>()
                / n_runs;
            mean_steps[e] = mean;
            std_steps[e] = var.sqrt();
        }
        out.push(WidthSeries {
            width,
            mean_steps,
            std_steps,
        });
    }

    fs::create_dir_all(&cfg.out_dir)?;
    let mut csv = String::from("width,episode,mean_steps,std_steps\n");
    for ws in &out {
        for e in 0..ws.mean_steps.len() {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                sig9(ws.width),
                e + 1,
                sig9(ws.mean_steps[e]),
                sig9(ws.std_steps[e]),
            ));
        }
    }
    fs::write(cfg.out_dir.join("sweep.csv"), csv)?;

    let series: Vec<svg::Series> = out
        .iter()
        .enumerate()
        .map(|(i, ws)| svg::Series {
            label: format!("width {}", ws.width),
            color: svg::PALETTE[i % svg::PALETTE.len()],
            values: &ws.mean_steps,
            band: None,
        })
        .collect();
    fs::write(
        cfg.out_dir.join("sweep.svg"),
        svg::line_chart("Steps per episode by basis width", "episode", "steps", &series),
    )?;

    Ok(out)
}

/// Output of the adaptation experiment.
#[derive(Debug, Clone, Serialize)]
pub struct AdaptationOutput {
    /// Mean pre-change loss floor (last 50 pretrain episodes) per run.
    pub floors: Vec<f64>,
    /// Post-change logs with the successor weights frozen.
    pub adapted: Vec<TrainLog>,
    /// Post-change logs with the successor filter re-initialized and
    /// everything learning from scratch.
    pub control: Vec<TrainLog>,
}

/// Episodes (1-based) until `q_loss` first drops to `threshold`, or `None`.
pub fn episodes_to_threshold(log: &TrainLog, threshold: f64) -> Option<usize> {
    log.iter().position(|e| e.q_loss <= threshold).map(|i| i + 1)
}

/// Pretrains an agent, scales the rewards, then measures how quickly the
/// frozen-successor variant recovers its loss floor compared with a
/// full-relearn control. Persists `adapt.csv` and `adapt.json`.
pub fn run_adaptation(cfg: &ExperimentConfig) -> Result<AdaptationOutput> {
    cfg.validate()?;
    let agent_cfg = cfg.resolved_agent_config()?;
    check_feature_budget(&agent_cfg)?;
    let pool = thread_pool()?;

    struct RunOut {
        floor: f64,
        adapted: TrainLog,
        control: TrainLog,
    }

    let results: Vec<RunOut> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|idx| -> Result<RunOut> {
                let seed = cfg.run_seed(idx);
                let mut env = cfg.build_env(seed)?;
                let mut agent = Agent::new(&agent_cfg, seed ^ AGENT_SEED_SALT)?;
                let pre = agent.train(env.as_mut(), cfg.adapt.pretrain_episodes)?;
                let floor_window = 50.min(pre.len()).max(1);
                let floor = pre[pre.len() - floor_window..]
                    .iter()
                    .map(|e| e.q_loss)
                    .sum::<f64>()
                    / floor_window as f64;

                let mut adapted_agent = agent.clone();
                let mut adapted_env = ScaledRewardEnv::new(
                    cfg.build_env(seed.wrapping_add(1 << 32))?,
                    cfg.adapt.reward_scale,
                );
                let adapted = adapted_agent.adapt_reward_change(
                    &mut adapted_env,
                    cfg.adapt.adapt_episodes,
                    cfg.adapt.freeze_sr,
                )?;

                let mut control_agent = agent;
                control_agent.reinitialize_sr();
                let mut control_env = ScaledRewardEnv::new(
                    cfg.build_env(seed.wrapping_add(1 << 32))?,
                    cfg.adapt.reward_scale,
                );
                let control = control_agent.adapt_reward_change(
                    &mut control_env,
                    cfg.adapt.adapt_episodes,
                    false,
                )?;

                Ok(RunOut {
                    floor,
                    adapted,
                    control,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let floors: Vec<f64> = results.iter().map(|r| r.floor).collect();
    let adapted: Vec<TrainLog> = results.iter().map(|r| r.adapted.clone()).collect();
    let control: Vec<TrainLog> = results.iter().map(|r| r.control.clone()).collect();

    let adapted_series = aggregate_runs(&adapted)?;
    let control_series = aggregate_runs(&control)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let mut csv = String::from(
        "episode,adapted_q_loss,control_q_loss,adapted_return,control_return\n",
    );
    for e in 0..adapted_series.len() {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            e + 1,
            sig9(adapted_series.q_loss[e]),
            sig9(control_series.q_loss[e]),
            sig9(adapted_series.mean_return[e]),
            sig9(control_series.mean_return[e]),
        ));
    }
    fs::write(cfg.out_dir.join("adapt.csv"), csv)?;

    #[derive(Serialize)]
    struct AdaptSummary<'a> {
        config: &'a ExperimentConfig,
        mean_floor: f64,
        mean_adapted_episodes_to_recovery: Option<f64>,
        mean_control_episodes_to_recovery: Option<f64>,
    }
    let mean_floor = floors.iter().sum::<f64>() / floors.len() as f64;
    let recovery = |logs: &[TrainLog]| -> Option<f64> {
        let mut total = 0.0;
        for (log, floor) in logs.iter().zip(&floors) {
            total += episodes_to_threshold(log, 1.2 * floor)? as f64;
        }
        Some(total / logs.len() as f64)
    };
    fs::write(
        cfg.out_dir.join("adapt.json"),
        serde_json::to_string_pretty(&AdaptSummary {
            config: cfg,
            mean_floor,
            mean_adapted_episodes_to_recovery: recovery(&adapted),
            mean_control_episodes_to_recovery: recovery(&control),
        })?,
    )?;

    Ok(AdaptationOutput {
        floors,
        adapted,
        control,
    })
}

/// Result of the closed-form occupancy check.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub mse: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Trains on the gridworld and compares the learned successor matrix with
/// the closed form `(I - gamma * P)^{-1}`. Persists `oracle.json`.
pub fn oracle_check(cfg: &ExperimentConfig) -> Result<OracleReport> {
    if cfg.environment != "gridworld" {
        bail!("oracle-check requires the gridworld environment");
    }
    let def = cfg.gridworld_def()?;
    if def.n_actions != 1 {
        bail!("oracle-check needs a single-action gridworld (a fixed policy)");
    }
    let agent_cfg = cfg.resolved_agent_config()?;
    let seed = cfg.run_seed(0);
    let mut env = Gridworld::new(def.clone())?;
    let mut agent = Agent::new(&agent_cfg, seed ^ AGENT_SEED_SALT)?;
    agent.train(&mut env, cfg.episodes)?;

    let spec = env.fixed_policy_spec(&vec![0; def.n_states], agent.gamma())?;
    let oracle = gridworld_sr_oracle(&spec)?;
    // Column s of the learned weights is the successor vector of state s,
    // i.e. row s of the occupancy matrix.
    let learned = agent.sr_filter().sr_matrix();
    let n = def.n_states;
    let mut mse = 0.0;
    for s in 0..n {
        for j in 0..n {
            let d = learned[[j, s]] - oracle[[s, j]];
            mse += d * d;
        }
    }
    mse /= (n * n) as f64;

    let report = OracleReport {
        mse,
        threshold: 0.05,
        pass: mse <= 0.05,
    };
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(
        cfg.out_dir.join("oracle.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

/// Re-renders the SVG charts from an existing `episodes.csv`.
pub fn replot(dir: &Path) -> Result<()> {
    let text = fs::read_to_string(dir.join("episodes.csv"))
        .with_context(|| format!("reading {}", dir.join("episodes.csv").display()))?;
    let mut mean_return = Vec::new();
    let mut std_return = Vec::new();
    let mut reward_mse = Vec::new();
    let mut sr_mse = Vec::new();
    let mut q_loss = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("malformed CSV line {}", i + 1);
        }
        mean_return.push(fields[1].parse::<f64>()?);
        std_return.push(fields[2].parse::<f64>()?);
        reward_mse.push(fields[3].parse::<f64>()?);
        sr_mse.push(fields[4].parse::<f64>()?);
        q_loss.push(fields[5].parse::<f64>()?);
    }
    let series = AggregateSeries {
        mean_return,
        std_return,
        reward_mse,
        sr_mse,
        q_loss,
    };
    fs::write(
        dir.join("returns.svg"),
        svg::line_chart(
            "Episode returns",
            "episode",
            "return",
            &[svg::Series {
                label: "mean return".into(),
                color: svg::PALETTE[0],
                values: &series.mean_return,
                band: Some(&series.std_return),
            }],
        ),
    )?;
    fs::write(
        dir.join("losses.svg"),
        svg::line_chart(
            "Model losses",
            "episode",
            "loss",
            &[
                svg::Series {
                    label: "reward mse".into(),
                    color: svg::PALETTE[0],
                    values: &series.reward_mse,
                    band: None,
                },
                svg::Series {
                    label: "sr mse".into(),
                    color: svg::PALETTE[1],
                    values: &series.sr_mse,
                    band: None,
                },
                svg::Series {
                    label: "q loss".into(),
                    color: svg::PALETTE[2],
                    values: &series.q_loss,
                    band: None,
                },
            ],
        ),
    )?;
    Ok(())
}
