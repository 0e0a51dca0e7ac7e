//! Inverted pendulum on a cart.
//!
//! State is `[theta, theta_dot]` with `theta = 0` upright. Three actions
//! apply a horizontal force of -50, 0, or +50 to the cart. Each step while
//! the pole stays within a quarter turn of upright earns +1; crossing the
//! horizontal ends the episode with reward 0.

use ndarray::{array, Array1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

use super::{check_action, Env, EnvSpec, StepOutcome};

const GRAVITY: f64 = 9.8;
const POLE_MASS: f64 = 2.0;
const CART_MASS: f64 = 8.0;
const POLE_HALF_LENGTH: f64 = 0.5;
const DT: f64 = 0.1;
const FORCES: [f64; 3] = [-50.0, 0.0, 50.0];
const MAX_STEPS: usize = 200;
const THETA_DOT_LIMIT: f64 = 10.0;
const START_ANGLE_STD: f64 = 0.1;

pub struct Pendulum {
    state: Array1<f64>,
    steps: usize,
    rng: ChaCha8Rng,
    /// When set, a uniform force perturbation in [-10, 10] is added in
    /// `step`. Lookahead is always noise-free.
    action_noise: bool,
    spec: EnvSpec,
}

impl Pendulum {
    pub fn new(seed: u64, action_noise: bool) -> Self {
        let spec = EnvSpec {
            state_dim: 2,
            n_actions: 3,
            state_bounds: vec![
                (-std::f64::consts::PI, std::f64::consts::PI),
                (-THETA_DOT_LIMIT, THETA_DOT_LIMIT),
            ],
            max_episode_steps: MAX_STEPS,
            reward_description: "+1 per step with |theta| <= pi/2, else 0 and terminal".into(),
            seed,
        };
        Self {
            state: array![0.0, 0.0],
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            action_noise,
            spec,
        }
    }

    fn dynamics(s: &Array1<f64>, force: f64) -> Array1<f64> {
        let theta = s[0];
        let theta_dot = s[1];
        let alpha = 1.0 / (POLE_MASS + CART_MASS);
        let num = GRAVITY * theta.sin()
            - alpha * POLE_MASS * POLE_HALF_LENGTH * theta_dot * theta_dot * (2.0 * theta).sin()
                / 2.0
            - alpha * theta.cos() * force;
        let den = 4.0 * POLE_HALF_LENGTH / 3.0
            - alpha * POLE_MASS * POLE_HALF_LENGTH * theta.cos() * theta.cos();
        let theta_acc = num / den;

        let new_theta = (theta + DT * theta_dot)
            .clamp(-std::f64::consts::PI, std::f64::consts::PI);
        let new_theta_dot = (theta_dot + DT * theta_acc).clamp(-THETA_DOT_LIMIT, THETA_DOT_LIMIT);
        array![new_theta, new_theta_dot]
    }
}

impl Env for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Array1<f64> {
        let start = Normal::new(0.0, START_ANGLE_STD).unwrap();
        self.state = array![start.sample(&mut self.rng), 0.0];
        self.steps = 0;
        self.state.clone()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        check_action(action, 3)?;
        let mut force = FORCES[action];
        if self.action_noise {
            force += self.rng.random_range(-10.0..10.0);
        }
        let next = Self::dynamics(&self.state, force);
        self.steps += 1;

        let fallen = next[0].abs() > std::f64::consts::FRAC_PI_2;
        let reward = if fallen { 0.0 } else { 1.0 };
        self.state = next.clone();
        Ok(StepOutcome {
            state: next,
            reward,
            terminal: fallen,
            truncated: !fallen && self.steps >= MAX_STEPS,
        })
    }

    fn lookahead(&self, s: &Array1<f64>, action: usize) -> Result<Array1<f64>> {
        check_action(action, 3)?;
        Ok(Self::dynamics(s, FORCES[action]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_draws_small_start_angle_with_zero_velocity() {
        let mut env = Pendulum::new(0, false);
        for _ in 0..50 {
            let s = env.reset();
            assert!(s[0].abs() < 1.0, "start angle {} too large", s[0]);
            assert_eq!(s[1], 0.0);
        }
        // Deterministic given the seed.
        let mut a = Pendulum::new(123, false);
        let mut b = Pendulum::new(123, false);
        assert_eq!(a.reset(), b.reset());
    }

    #[test]
    fn beyond_horizontal_terminates_with_zero_reward() {
        let mut env = Pendulum::new(0, false);
        env.reset();
        env.state = array![0.9 * std::f64::consts::PI, 0.0];
        let out = env.step(1).unwrap();
        assert!(out.terminal);
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn upright_step_rewards_one() {
        let mut env = Pendulum::new(0, false);
        env.reset();
        env.state = array![0.0, 0.0];
        let out = env.step(1).unwrap();
        assert_eq!(out.reward, 1.0);
        assert!(!out.terminal);
    }

    #[test]
    fn caps_at_two_hundred_steps() {
        let mut env = Pendulum::new(9, false);
        env.reset();
        // Pin the state each step so the pole never falls; only the cap ends it.
        let mut count = 0;
        loop {
            env.state = array![0.0, 0.0];
            let out = env.step(1).unwrap();
            count += 1;
            if out.episode_over() {
                assert!(out.truncated);
                assert!(!out.terminal);
                break;
            }
        }
        assert_eq!(count, MAX_STEPS);
    }
}
