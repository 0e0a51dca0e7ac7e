//! Discrete gridworld with tabulated deterministic transitions.
//!
//! Serves as the verification environment: under a fixed policy the
//! discounted state-occupancy matrix has the closed form
//! `(I - gamma * P)^{-1}`, which [`gridworld_sr_oracle`] evaluates directly.
//! States are exposed as one-element vectors holding the state index so the
//! same agent machinery runs unchanged.

use ndarray::{array, Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

use super::{check_action, Env, EnvSpec, StepOutcome};

/// Plain-file description of a gridworld (loadable from JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridworldDef {
    pub n_states: usize,
    pub n_actions: usize,
    /// `successors[s][a]` is the unique next state of action `a` in state `s`.
    pub successors: Vec<Vec<usize>>,
    /// Reward of occupying each state; a step from `s` yields `rewards[s]`.
    pub rewards: Vec<f64>,
    #[serde(default)]
    pub terminal_states: Vec<usize>,
    #[serde(default)]
    pub start_state: usize,
    pub max_episode_steps: usize,
}

impl GridworldDef {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::Config("gridworld needs states and actions".into()));
        }
        if self.successors.len() != self.n_states || self.rewards.len() != self.n_states {
            return Err(Error::Config(
                "gridworld successor/reward tables must cover every state".into(),
            ));
        }
        for row in &self.successors {
            if row.len() != self.n_actions {
                return Err(Error::Config(
                    "gridworld successor rows must cover every action".into(),
                ));
            }
            if row.iter().any(|&s| s >= self.n_states) {
                return Err(Error::Config("gridworld successor out of range".into()));
            }
        }
        if self.start_state >= self.n_states {
            return Err(Error::Config("gridworld start state out of range".into()));
        }
        if self.terminal_states.iter().any(|&s| s >= self.n_states) {
            return Err(Error::Config("gridworld terminal state out of range".into()));
        }
        Ok(())
    }

    /// Single-action cyclic chain `0 -> 1 -> ... -> n-1 -> 0` with reward 1
    /// in the last state. Never terminates; episodes end at the step cap.
    pub fn cyclic_chain(n_states: usize, max_episode_steps: usize) -> Self {
        let mut rewards = vec![0.0; n_states];
        rewards[n_states - 1] = 1.0;
        Self {
            n_states,
            n_actions: 1,
            successors: (0..n_states).map(|s| vec![(s + 1) % n_states]).collect(),
            rewards,
            terminal_states: vec![],
            start_state: 0,
            max_episode_steps,
        }
    }
}

pub struct Gridworld {
    def: GridworldDef,
    terminal: Vec<bool>,
    state: usize,
    steps: usize,
    spec: EnvSpec,
}

impl Gridworld {
    pub fn new(def: GridworldDef) -> Result<Self> {
        def.validate()?;
        let mut terminal = vec![false; def.n_states];
        for &s in &def.terminal_states {
            terminal[s] = true;
        }
        let spec = EnvSpec {
            state_dim: 1,
            n_actions: def.n_actions,
            state_bounds: vec![(0.0, (def.n_states - 1) as f64)],
            max_episode_steps: def.max_episode_steps,
            reward_description: "per-state reward table".into(),
            seed: 0,
        };
        Ok(Self {
            state: def.start_state,
            terminal,
            steps: 0,
            spec,
            def,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let def: GridworldDef = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("gridworld file: {e}")))?;
        Self::new(def)
    }

    pub fn def(&self) -> &GridworldDef {
        &self.def
    }

    pub fn n_states(&self) -> usize {
        self.def.n_states
    }

    /// Row-stochastic transition matrix under a fixed policy (one action
    /// index per state).
    pub fn fixed_policy_matrix(&self, policy: &[usize]) -> Result<Array2<f64>> {
        if policy.len() != self.def.n_states {
            return Err(Error::Config("policy must cover every state".into()));
        }
        let n = self.def.n_states;
        let mut p = Array2::<f64>::zeros((n, n));
        for s in 0..n {
            check_action(policy[s], self.def.n_actions)?;
            p[[s, self.def.successors[s][policy[s]]]] = 1.0;
        }
        Ok(p)
    }

    /// Closed-form oracle inputs for this world under a fixed policy.
    pub fn fixed_policy_spec(&self, policy: &[usize], gamma: f64) -> Result<GridworldSpec> {
        GridworldSpec::new(
            self.fixed_policy_matrix(policy)?,
            Array1::from_vec(self.def.rewards.clone()),
            gamma,
        )
    }
}

impl Env for Gridworld {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Array1<f64> {
        self.state = self.def.start_state;
        self.steps = 0;
        array![self.state as f64]
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        check_action(action, self.def.n_actions)?;
        let reward = self.def.rewards[self.state];
        let next = self.def.successors[self.state][action];
        self.steps += 1;
        let terminal = self.terminal[next];
        self.state = next;
        Ok(StepOutcome {
            state: array![next as f64],
            reward,
            terminal,
            truncated: !terminal && self.steps >= self.def.max_episode_steps,
        })
    }

    fn lookahead(&self, s: &Array1<f64>, action: usize) -> Result<Array1<f64>> {
        check_action(action, self.def.n_actions)?;
        let idx = s[0].round();
        if idx < 0.0 || idx >= self.def.n_states as f64 {
            return Err(Error::OutOfRange {
                what: "state index",
                got: idx.max(0.0) as usize,
                limit: self.def.n_states,
            });
        }
        Ok(array![self.def.successors[idx as usize][action] as f64])
    }
}

/// Fixed-policy description used by the closed-form occupancy oracle.
#[derive(Debug, Clone)]
pub struct GridworldSpec {
    pub transitions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub gamma: f64,
}

impl GridworldSpec {
    pub fn new(transitions: Array2<f64>, rewards: Array1<f64>, gamma: f64) -> Result<Self> {
        let n = transitions.nrows();
        if transitions.ncols() != n || rewards.len() != n {
            return Err(Error::Config("transition matrix must be square and match rewards".into()));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::invalid("gamma", "must lie in [0, 1)"));
        }
        for s in 0..n {
            let row_sum: f64 = transitions.row(s).sum();
            if (row_sum - 1.0).abs() > 1e-9 || transitions.row(s).iter().any(|&p| p < 0.0) {
                return Err(Error::Config(format!("row {s} is not a distribution")));
            }
        }
        Ok(Self {
            transitions,
            rewards,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.transitions.nrows()
    }
}

/// Discounted expected state-occupancy matrix `(I - gamma * P)^{-1}`.
///
/// Entry `(s, s')` is the expected discounted number of visits to `s'`
/// starting from `s` under the fixed policy.
pub fn gridworld_sr_oracle(spec: &GridworldSpec) -> Result<Array2<f64>> {
    let n = spec.n_states();
    let system = Array2::<f64>::eye(n) - &(&spec.transitions * spec.gamma);
    linalg::invert(&system)
}
