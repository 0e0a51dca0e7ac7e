//! Adaptive Kalman-filter learning of successor features.
//!
//! The library tracks two linear models of an agent's experience. The reward
//! weights are estimated by a Kalman filter whose unknown measurement noise
//! variance is adapted online by a bank of candidate filters fused with
//! Bayesian weights ([`reward`]). The successor-feature weight matrix is
//! estimated by casting the temporal-difference relation as a Kalman
//! measurement model over the column-stacked weights ([`sr`]). Gaussian
//! radial basis features connect continuous states to both models and their
//! shapes adapt by a restricted gradient rule ([`features`]). The agent
//! ([`agent`]) composes the pieces and selects actions by the information
//! carried about the successor weights; [`env`] provides deterministic
//! benchmark environments with pure one-step lookahead and a closed-form
//! occupancy oracle for verification.

pub use ndarray;

pub mod agent;
pub mod env;
pub mod error;
pub mod features;
pub mod linalg;
pub mod reward;
pub mod sr;

pub use agent::{
    Agent, AgentConfig, EpisodeLog, ExplorationMode, FeatureConfig, RewardConfig, SrFilterConfig,
    StepMetrics, TrainLog, Transition,
};
pub use env::{
    gridworld_sr_oracle, Env, EnvSpec, Gridworld, GridworldDef, GridworldSpec, MountainCar,
    Pendulum, ScaledRewardEnv, StepOutcome,
};
pub use error::{Error, Result};
pub use features::{
    build_state_action_features, rbf_activation, rgd_update, FeatureMap, RbfSet, RgdBranch,
    StateActionFeatures, StateFeatures,
};
pub use reward::{
    gaussian_likelihood, kf_predict, kf_update_single, BankUpdateResult, RewardFilter,
    RewardParams,
};
pub use sr::{build_g, q_value, SrFilter, SrTdIngredients};
