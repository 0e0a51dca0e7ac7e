//! Control environments with deterministic dynamics and pure one-step
//! lookahead.

use ndarray::Array1;

use crate::error::Result;

mod gridworld;
mod mountain_car;
mod pendulum;

pub use gridworld::{gridworld_sr_oracle, Gridworld, GridworldDef, GridworldSpec};
pub use mountain_car::MountainCar;
pub use pendulum::Pendulum;

/// Static description of an environment.
#[derive(Debug, Clone)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub n_actions: usize,
    /// Inclusive per-dimension bounds every emitted state stays within.
    pub state_bounds: Vec<(f64, f64)>,
    pub max_episode_steps: usize,
    pub reward_description: String,
    pub seed: u64,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Array1<f64>,
    pub reward: f64,
    /// An absorbing state was reached; future occupancy truncates here.
    pub terminal: bool,
    /// The episode step cap was hit. Ends the episode without implying
    /// anything about the state itself.
    pub truncated: bool,
}

impl StepOutcome {
    /// Whether the episode is over for either reason.
    pub fn episode_over(&self) -> bool {
        self.terminal || self.truncated
    }
}

pub trait Env {
    fn spec(&self) -> &EnvSpec;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self) -> Array1<f64>;

    /// Advances the environment by one action.
    fn step(&mut self, action: usize) -> Result<StepOutcome>;

    /// Pure one-step dynamics: the successor of `(s, a)` with noise terms
    /// suppressed. Never mutates the environment.
    fn lookahead(&self, s: &Array1<f64>, action: usize) -> Result<Array1<f64>>;
}

/// Wraps an environment and scales every reward by a constant factor.
/// Dynamics, termination, and lookahead pass through unchanged.
pub struct ScaledRewardEnv {
    inner: Box<dyn Env>,
    scale: f64,
}

impl ScaledRewardEnv {
    pub fn new(inner: Box<dyn Env>, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl Env for ScaledRewardEnv {
    fn spec(&self) -> &EnvSpec {
        self.inner.spec()
    }

    fn reset(&mut self) -> Array1<f64> {
        self.inner.reset()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let mut out = self.inner.step(action)?;
        out.reward *= self.scale;
        Ok(out)
    }

    fn lookahead(&self, s: &Array1<f64>, action: usize) -> Result<Array1<f64>> {
        self.inner.lookahead(s, action)
    }
}

pub(crate) fn check_action(action: usize, n_actions: usize) -> Result<()> {
    if action >= n_actions {
        return Err(crate::error::Error::OutOfRange {
            what: "action",
            got: action,
            limit: n_actions,
        });
    }
    Ok(())
}
