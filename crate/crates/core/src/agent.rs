//! The learning agent: per-step composition of feature construction,
//! uncertainty-directed action selection, reward-weight filtering,
//! successor-weight filtering, and basis-function adaptation.
//!
//! The per-transition update order is fixed: features, reward bank update,
//! successor update, value evaluation, basis adaptation. Replaying an
//! identical transition stream with an identical seed reproduces the agent
//! state bit for bit.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::Env;
use crate::error::{Error, Result};
use crate::features::{
    build_state_action_features, rgd_update, FeatureMap, RbfSet, StateActionFeatures,
};
use crate::reward::{RewardFilter, RewardParams};
use crate::sr::{build_g, q_value, SrFilter};

/// One observed transition, including the on-policy next action.
#[derive(Debug, Clone)]
pub struct Transition {
    pub state: Array1<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Array1<f64>,
    /// Behavior action chosen at `next_state`; ignored on terminal
    /// transitions.
    pub next_action: usize,
    pub terminal: bool,
}

/// Behavior policy selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationMode {
    /// Pick the action whose feature-difference vector carries the most
    /// information about the successor weights (largest `g^T g`), using the
    /// environment's pure lookahead with a greedy continuation.
    Information,
    /// Greedy on the current value estimates.
    Greedy,
    /// Greedy with probability `1 - epsilon`, uniform otherwise.
    EpsilonGreedy(f64),
}

/// Feature construction settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureConfig {
    /// Evenly spaced grid of Gaussian bases over explicit ranges.
    RbfGrid {
        ranges: Vec<(f64, f64)>,
        order: usize,
        include_bias: bool,
        /// Isotropic covariance scale; defaults to `2 / (order - 1)`.
        sigma_scale: Option<f64>,
    },
    /// Explicit centers with a shared isotropic covariance.
    RbfExplicit {
        centers: Vec<Vec<f64>>,
        sigma_scale: f64,
        include_bias: bool,
    },
    /// Explicit centers and full covariance matrices.
    RbfFull {
        centers: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
        include_bias: bool,
    },
    /// One-hot indicators for discrete states.
    OneHot { n_states: usize },
}

impl FeatureConfig {
    pub fn build(&self) -> Result<FeatureMap> {
        match self {
            FeatureConfig::RbfGrid {
                ranges,
                order,
                include_bias,
                sigma_scale,
            } => Ok(FeatureMap::Rbf(RbfSet::even_grid(
                ranges,
                *order,
                *include_bias,
                *sigma_scale,
            )?)),
            FeatureConfig::RbfExplicit {
                centers,
                sigma_scale,
                include_bias,
            } => {
                let centers = centers.iter().cloned().map(Array1::from_vec).collect();
                Ok(FeatureMap::Rbf(RbfSet::from_centers(
                    centers,
                    *sigma_scale,
                    *include_bias,
                )?))
            }
            FeatureConfig::RbfFull {
                centers,
                covariances,
                include_bias,
            } => {
                let centers: Vec<Array1<f64>> =
                    centers.iter().cloned().map(Array1::from_vec).collect();
                let covs = covariances
                    .iter()
                    .map(|rows| {
                        let d = rows.len();
                        let mut m = ndarray::Array2::<f64>::zeros((d, d));
                        for (i, row) in rows.iter().enumerate() {
                            if row.len() != d {
                                return Err(Error::Config("covariance rows must be square".into()));
                            }
                            for (j, &v) in row.iter().enumerate() {
                                m[[i, j]] = v;
                            }
                        }
                        Ok(m)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FeatureMap::Rbf(RbfSet::new(centers, covs, *include_bias)?))
            }
            FeatureConfig::OneHot { n_states } => {
                if *n_states == 0 {
                    return Err(Error::Config("one-hot features need at least one state".into()));
                }
                Ok(FeatureMap::OneHot(*n_states))
            }
        }
    }
}

/// Reward-filter settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub f_scale: f64,
    pub b_scale: f64,
    pub p0_scale: f64,
    pub omega_candidates: Vec<f64>,
}

impl Default for RewardConfig {
    fn default() -> Self {
        let p = RewardParams::default();
        Self {
            f_scale: p.f_scale,
            b_scale: p.b_scale,
            p0_scale: p.p0_scale,
            omega_candidates: p.omega_candidates,
        }
    }
}

/// Successor-filter settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SrFilterConfig {
    pub a_scale: f64,
    pub u_scale: f64,
    pub e_scale: f64,
    pub c0_scale: f64,
}

impl Default for SrFilterConfig {
    fn default() -> Self {
        Self {
            a_scale: 0.9,
            u_scale: 1e-2,
            e_scale: 1.0,
            c0_scale: 10.0,
        }
    }
}

/// Full agent configuration; the single entry point the harness
/// deserializes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub gamma: f64,
    pub n_actions: usize,
    pub features: FeatureConfig,
    pub lambda_mu: f64,
    pub lambda_sigma: f64,
    pub exploration: ExplorationMode,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub sr: SrFilterConfig,
    #[serde(default)]
    pub log_bank_weights: bool,
    #[serde(default)]
    pub reset_bank_on_reward_change: bool,
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) || self.gamma == 0.0 {
            return Err(Error::invalid("gamma", "must lie in (0, 1)"));
        }
        if self.n_actions == 0 {
            return Err(Error::invalid("n_actions", "must be positive"));
        }
        if self.lambda_mu <= 0.0 || self.lambda_sigma <= 0.0 {
            return Err(Error::invalid("lambda", "adaptation rates must be positive"));
        }
        if let ExplorationMode::EpsilonGreedy(eps) = self.exploration {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::invalid("epsilon", "must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    /// Inverted-pendulum defaults: nine bases on the angle/velocity grid
    /// plus a bias, unit covariances, three force actions. The evolution
    /// gains are 1 (random-walk weight models): a contractive gain shrinks
    /// the tracked weights toward zero faster than the weak per-step
    /// measurements can restore them, which collapses the value scale.
    pub fn pendulum_default() -> Self {
        let q = std::f64::consts::FRAC_PI_4;
        let mut centers = Vec::new();
        for &a in &[-q, 0.0, q] {
            for &b in &[-0.5, 0.0, 0.5] {
                centers.push(vec![a, b]);
            }
        }
        Self {
            gamma: 0.95,
            n_actions: 3,
            features: FeatureConfig::RbfExplicit {
                centers,
                sigma_scale: 1.0,
                include_bias: true,
            },
            lambda_mu: 1e-6,
            lambda_sigma: 1e-6,
            exploration: ExplorationMode::Information,
            reward: RewardConfig {
                f_scale: 1.0,
                b_scale: 1e-3,
                ..RewardConfig::default()
            },
            sr: SrFilterConfig {
                a_scale: 1.0,
                ..SrFilterConfig::default()
            },
            log_bank_weights: false,
            reset_bank_on_reward_change: false,
        }
    }

    /// Mountain-car defaults: nine bases on the position/velocity grid plus
    /// a bias, three push actions. The basis covariances resolve each
    /// dimension's working range separately; an isotropic unit covariance
    /// leaves the +-0.07 velocity band invisible, and a velocity-blind value
    /// function cannot express any energy-pumping policy.
    pub fn mountain_car_default() -> Self {
        let mut centers = Vec::new();
        let mut covariances = Vec::new();
        for &a in &[-0.775, -0.35, 0.775] {
            for &b in &[-0.035, 0.0, 0.035] {
                centers.push(vec![a, b]);
                covariances.push(vec![vec![1.0, 0.0], vec![0.0, 0.05 * 0.05]]);
            }
        }
        Self {
            gamma: 0.95,
            n_actions: 3,
            features: FeatureConfig::RbfFull {
                centers,
                covariances,
                include_bias: true,
            },
            lambda_mu: 1e-6,
            lambda_sigma: 1e-6,
            exploration: ExplorationMode::Information,
            reward: RewardConfig {
                f_scale: 1.0,
                b_scale: 1e-2,
                ..RewardConfig::default()
            },
            sr: SrFilterConfig {
                a_scale: 1.0,
                ..SrFilterConfig::default()
            },
            log_bank_weights: false,
            reset_bank_on_reward_change: false,
        }
    }

    /// Gridworld defaults: one-hot features and martingale evolution models
    /// (unit gains, small process noise) so the filters settle on the exact
    /// fixed point instead of a shrunk one.
    pub fn gridworld_default(n_states: usize, n_actions: usize, gamma: f64) -> Self {
        Self {
            gamma,
            n_actions,
            features: FeatureConfig::OneHot { n_states },
            lambda_mu: 1e-3,
            lambda_sigma: 1e-3,
            exploration: ExplorationMode::Information,
            reward: RewardConfig {
                f_scale: 1.0,
                b_scale: 1e-4,
                ..RewardConfig::default()
            },
            sr: SrFilterConfig {
                a_scale: 1.0,
                u_scale: 1e-4,
                ..SrFilterConfig::default()
            },
            log_bank_weights: false,
            reset_bank_on_reward_change: false,
        }
    }
}

/// Per-step quantities fed into the episode log.
#[derive(Debug, Clone, Copy)]
pub struct StepMetrics {
    /// Squared reward residual `(r - psi^T theta)^2` after the bank update.
    pub reward_sq_err: f64,
    /// Normalized squared successor residual `|psi - W g|^2 / L` after the
    /// filter update.
    pub sr_sq_err: f64,
    /// Value estimate of the visited pair after the updates.
    pub q: f64,
}

/// Per-episode record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode_return: f64,
    pub steps: usize,
    pub reward_mse: f64,
    pub sr_mse: f64,
    /// Always exactly `reward_mse + sr_mse`.
    pub q_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bank_weight_trace: Option<Vec<Vec<f64>>>,
}

/// A training run: one log per episode.
pub type TrainLog = Vec<EpisodeLog>;

#[derive(Clone)]
pub struct Agent {
    gamma: f64,
    n_actions: usize,
    exploration: ExplorationMode,
    lambda_mu: f64,
    lambda_sigma: f64,
    features: FeatureMap,
    reward: RewardFilter,
    sr: SrFilter,
    rng: ChaCha8Rng,
    log_bank_weights: bool,
    reset_bank_on_reward_change: bool,
    reward_p0_scale: f64,
    sr_c0_scale: f64,
}

impl Agent {
    pub fn new(config: &AgentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let features = config.features.build()?;
        let l = features.feature_len() * config.n_actions;
        let reward = RewardFilter::new(
            l,
            &RewardParams {
                f_scale: config.reward.f_scale,
                b_scale: config.reward.b_scale,
                p0_scale: config.reward.p0_scale,
                omega_candidates: config.reward.omega_candidates.clone(),
            },
        )?;
        let sr = SrFilter::isotropic(
            l,
            config.sr.c0_scale,
            config.sr.u_scale,
            config.sr.e_scale,
            config.sr.a_scale,
        )?;
        Ok(Self {
            gamma: config.gamma,
            n_actions: config.n_actions,
            exploration: config.exploration,
            lambda_mu: config.lambda_mu,
            lambda_sigma: config.lambda_sigma,
            features,
            reward,
            sr,
            rng: ChaCha8Rng::seed_from_u64(seed),
            log_bank_weights: config.log_bank_weights,
            reset_bank_on_reward_change: config.reset_bank_on_reward_change,
            reward_p0_scale: config.reward.p0_scale,
            sr_c0_scale: config.sr.c0_scale,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Length of the state-action feature vector.
    pub fn l(&self) -> usize {
        self.features.feature_len() * self.n_actions
    }

    pub fn theta(&self) -> &Array1<f64> {
        self.reward.theta()
    }

    pub fn bank_weights(&self) -> &Array1<f64> {
        self.reward.bank_weights()
    }

    pub fn reward_filter(&self) -> &RewardFilter {
        &self.reward
    }

    pub fn sr_filter(&self) -> &SrFilter {
        &self.sr
    }

    pub fn features(&self) -> &FeatureMap {
        &self.features
    }

    pub fn state_action_features(
        &self,
        s: ArrayView1<f64>,
        action: usize,
    ) -> Result<StateActionFeatures> {
        let phi = self.features.state_features(s)?;
        build_state_action_features(&phi, action, self.n_actions)
    }

    /// Value estimate of `(s, a)` under the current weights.
    pub fn q_value_at(&self, s: ArrayView1<f64>, action: usize) -> Result<f64> {
        let psi = self.state_action_features(s, action)?;
        Ok(q_value(self.theta().view(), &self.sr, psi.values().view()))
    }

    pub fn q_values(&self, s: ArrayView1<f64>) -> Result<Vec<f64>> {
        (0..self.n_actions).map(|a| self.q_value_at(s, a)).collect()
    }

    fn greedy_action(&self, s: ArrayView1<f64>) -> Result<usize> {
        let qs = self.q_values(s)?;
        Ok(argmax_lowest_tie(&qs))
    }

    /// Behavior action at `s`. In information mode the score of a candidate
    /// action is `g^T g` where `g = psi(s, a) - gamma * psi(s', a')`, `s'`
    /// the pure lookahead successor and `a'` its greedy continuation; ties
    /// break toward the lowest index.
    pub fn select_action(&mut self, s: ArrayView1<f64>, env: &dyn Env) -> Result<usize> {
        match self.exploration {
            ExplorationMode::Greedy => self.greedy_action(s),
            ExplorationMode::EpsilonGreedy(eps) => {
                if self.rng.random::<f64>() < eps {
                    Ok(self.rng.random_range(0..self.n_actions))
                } else {
                    self.greedy_action(s)
                }
            }
            ExplorationMode::Information => {
                let phi = self.features.state_features(s)?;
                let mut scores = Vec::with_capacity(self.n_actions);
                for a in 0..self.n_actions {
                    let successor = env.lookahead(&s.to_owned(), a)?;
                    let phi_next = self.features.state_features(successor.view())?;
                    let mut best_b = 0usize;
                    let mut best_q = f64::NEG_INFINITY;
                    for b in 0..self.n_actions {
                        let psi_b = build_state_action_features(&phi_next, b, self.n_actions)?;
                        let q = q_value(self.theta().view(), &self.sr, psi_b.values().view());
                        if q > best_q {
                            best_q = q;
                            best_b = b;
                        }
                    }
                    let psi_a = build_state_action_features(&phi, a, self.n_actions)?;
                    let psi_next = build_state_action_features(&phi_next, best_b, self.n_actions)?;
                    let g = psi_a.values() - &(psi_next.values() * self.gamma);
                    scores.push(g.dot(&g));
                }
                Ok(argmax_lowest_tie(&scores))
            }
        }
    }

    /// Applies one transition to every learner, in the fixed order:
    /// reward bank, successor filter, value evaluation, basis adaptation.
    pub fn agent_step(&mut self, t: &Transition) -> Result<StepMetrics> {
        self.step_inner(t, false)
    }

    /// Like [`Agent::agent_step`] but with the successor weights and basis
    /// functions frozen; only the reward bank runs.
    pub fn replay_step(&mut self, t: &Transition, freeze_sr: bool) -> Result<StepMetrics> {
        self.step_inner(t, freeze_sr)
    }

    fn step_inner(&mut self, t: &Transition, freeze_sr: bool) -> Result<StepMetrics> {
        let psi = self.state_action_features(t.state.view(), t.action)?;

        self.reward.mmae_step(psi.values().view(), t.reward)?;

        let next_action = if t.terminal { 0 } else { t.next_action };
        let psi_next = self.state_action_features(t.next_state.view(), next_action)?;
        let ing = build_g(psi.values(), psi_next.values(), self.gamma, t.terminal);
        if !freeze_sr {
            self.sr.ktd_step(&ing)?;
        }

        let reward_residual = t.reward - self.reward.predicted_reward(psi.values().view());
        let sr_residual = psi.values() - &self.sr.sr_vector(ing.g.view());
        let sr_sq_err = sr_residual.dot(&sr_residual) / self.l() as f64;
        let q = q_value(self.theta().view(), &self.sr, psi.values().view());

        if !freeze_sr {
            if let FeatureMap::Rbf(rbfs) = &mut self.features {
                rgd_update(
                    rbfs,
                    t.state.view(),
                    &psi,
                    self.reward.theta().view(),
                    t.reward,
                    self.lambda_mu,
                    self.lambda_sigma,
                )?;
            }
        }

        Ok(StepMetrics {
            reward_sq_err: reward_residual * reward_residual,
            sr_sq_err,
            q,
        })
    }

    /// Feeds a recorded transition stream through the learners.
    pub fn replay(&mut self, stream: &[Transition], freeze_sr: bool) -> Result<Vec<StepMetrics>> {
        stream
            .iter()
            .map(|t| self.step_inner(t, freeze_sr))
            .collect()
    }

    /// Runs one episode to termination or the environment's step cap.
    pub fn run_episode(&mut self, env: &mut dyn Env) -> Result<EpisodeLog> {
        self.run_episode_inner(env, false)
    }

    fn run_episode_inner(&mut self, env: &mut dyn Env, freeze_sr: bool) -> Result<EpisodeLog> {
        let max_steps = env.spec().max_episode_steps;
        let mut trace = self.log_bank_weights.then(Vec::new);
        let mut s = env.reset();
        let mut episode_return = 0.0;
        let mut steps = 0usize;
        let mut reward_sq_sum = 0.0;
        let mut sr_sq_sum = 0.0;

        if max_steps > 0 {
            let mut a = self.select_action(s.view(), env)?;
            loop {
                let out = env.step(a)?;
                episode_return += out.reward;
                steps += 1;
                // A step-cap cut ends the episode but is not an absorbing
                // state, so the bootstrap keeps its discount term there.
                let next_action = if out.terminal {
                    0
                } else {
                    self.select_action(out.state.view(), env)?
                };
                let t = Transition {
                    state: s,
                    action: a,
                    reward: out.reward,
                    next_state: out.state.clone(),
                    next_action,
                    terminal: out.terminal,
                };
                let m = self.step_inner(&t, freeze_sr)?;
                reward_sq_sum += m.reward_sq_err;
                sr_sq_sum += m.sr_sq_err;
                if let Some(tr) = trace.as_mut() {
                    tr.push(self.reward.bank_weights().to_vec());
                }
                if out.episode_over() || steps >= max_steps {
                    break;
                }
                s = out.state;
                a = next_action;
            }
        }

        let denom = steps.max(1) as f64;
        let reward_mse = reward_sq_sum / denom;
        let sr_mse = sr_sq_sum / denom;
        Ok(EpisodeLog {
            episode_return,
            steps,
            reward_mse,
            sr_mse,
            q_loss: reward_mse + sr_mse,
            bank_weight_trace: trace,
        })
    }

    /// Sequential episodes with persistent agent state.
    pub fn train(&mut self, env: &mut dyn Env, n_episodes: usize) -> Result<TrainLog> {
        (0..n_episodes)
            .map(|_| self.run_episode(env))
            .collect()
    }

    /// Continues training after a reward change. With `freeze_sr` the
    /// successor weights and basis functions stay fixed and only the reward
    /// bank relearns; values are recomputed from the frozen successor matrix
    /// and the fresh reward weights.
    pub fn adapt_reward_change(
        &mut self,
        env: &mut dyn Env,
        n_episodes: usize,
        freeze_sr: bool,
    ) -> Result<TrainLog> {
        if self.reset_bank_on_reward_change {
            self.reward_mut().reset_weights_uniform();
        }
        (0..n_episodes)
            .map(|_| self.run_episode_inner(env, freeze_sr))
            .collect()
    }

    /// Re-initializes the reward filter (zero mean, fresh covariance).
    pub fn reinitialize_reward(&mut self) {
        let p0 = self.reward_p0_scale;
        self.reward.reinitialize(p0);
    }

    /// Re-initializes the successor filter (zero weights, fresh covariance).
    pub fn reinitialize_sr(&mut self) {
        let c0 = self.sr_c0_scale;
        self.sr.reinitialize(c0);
    }

    fn reward_mut(&mut self) -> &mut RewardFilter {
        &mut self.reward
    }
}

fn argmax_lowest_tie(values: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}
