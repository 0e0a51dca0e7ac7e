//! Mountain car.
//!
//! State is `[x, x_dot]`. Actions 0/1/2 push left / coast / push right with
//! force `0.001 * (a - 1)`. Gravity contributes `-0.0025 * cos(3x)`. The
//! goal is the right hilltop at `x >= 0.5`; every non-goal step costs -1 and
//! the left boundary acts as a wall (position clamped, velocity zeroed).

use ndarray::{array, Array1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::{check_action, Env, EnvSpec, StepOutcome};

const X_MIN: f64 = -1.2;
const X_MAX: f64 = 0.6;
const V_LIMIT: f64 = 0.07;
const GOAL_X: f64 = 0.5;
const MAX_STEPS: usize = 200;

pub struct MountainCar {
    state: Array1<f64>,
    steps: usize,
    rng: ChaCha8Rng,
    spec: EnvSpec,
}

impl MountainCar {
    pub fn new(seed: u64) -> Self {
        let spec = EnvSpec {
            state_dim: 2,
            n_actions: 3,
            state_bounds: vec![(X_MIN, X_MAX), (-V_LIMIT, V_LIMIT)],
            max_episode_steps: MAX_STEPS,
            reward_description: "-1 per step until x >= 0.5".into(),
            seed,
        };
        Self {
            state: array![-0.5, 0.0],
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            spec,
        }
    }

    fn dynamics(s: &Array1<f64>, action: usize) -> Array1<f64> {
        let x = s[0];
        let v = s[1];
        let force = 0.001 * (action as f64 - 1.0);
        let mut v_next = (v + force - 0.0025 * (3.0 * x).cos()).clamp(-V_LIMIT, V_LIMIT);
        let mut x_next = x + v_next;
        if x_next <= X_MIN {
            x_next = X_MIN;
            v_next = 0.0;
        }
        if x_next > X_MAX {
            x_next = X_MAX;
        }
        array![x_next, v_next]
    }
}

impl Env for MountainCar {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Array1<f64> {
        self.state = array![self.rng.random_range(-0.6..-0.4), 0.0];
        self.steps = 0;
        self.state.clone()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        check_action(action, 3)?;
        let next = Self::dynamics(&self.state, action);
        self.steps += 1;
        let at_goal = next[0] >= GOAL_X;
        let reward = if at_goal { 0.0 } else { -1.0 };
        self.state = next.clone();
        Ok(StepOutcome {
            state: next,
            reward,
            terminal: at_goal,
            truncated: !at_goal && self.steps >= MAX_STEPS,
        })
    }

    fn lookahead(&self, s: &Array1<f64>, action: usize) -> Result<Array1<f64>> {
        check_action(action, 3)?;
        Ok(Self::dynamics(s, action))
    }
}
