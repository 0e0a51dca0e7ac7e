//! Reward weight estimation.
//!
//! The immediate reward is modeled as a linear function of the state-action
//! features, `r ≈ psi^T theta`, and `theta` is tracked by a Kalman filter
//! with a scalar-gain evolution model. The measurement noise variance is
//! unknown, so a bank of filters runs in parallel, one per candidate
//! variance; Bayesian weights over the bank adapt online and the posterior is
//! the moment-matched mixture of the per-filter posteriors.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;

/// Densities below this value are clamped so bank weights never reach zero
/// through underflow alone.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

/// Prediction step: `theta <- f * theta`, `p <- f^2 * p + b`.
pub fn kf_predict(
    theta: ArrayView1<f64>,
    p: &Array2<f64>,
    f_scale: f64,
    b: &Array2<f64>,
) -> (Array1<f64>, Array2<f64>) {
    let theta_prior = &theta.to_owned() * f_scale;
    let mut p_prior = p * (f_scale * f_scale) + b;
    linalg::symmetrize(&mut p_prior);
    (theta_prior, p_prior)
}

/// Measurement update for one scalar observation `r ≈ h^T theta` with
/// measurement noise variance `omega`.
pub fn kf_update_single(
    theta_prior: ArrayView1<f64>,
    p_prior: &Array2<f64>,
    h: ArrayView1<f64>,
    r: f64,
    omega: f64,
) -> Result<(Array1<f64>, Array2<f64>)> {
    if omega <= 0.0 {
        return Err(Error::invalid("omega", "must be positive"));
    }
    let ph = p_prior.dot(&h);
    let z = h.dot(&ph) + omega;
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::Numeric(format!("non-positive innovation variance {z}")));
    }
    let residual = r - h.dot(&theta_prior);
    let gain = &ph / z;
    let theta = &theta_prior.to_owned() + &(&gain * residual);
    // (I - K h^T) P = P - K (h^T P); h^T P equals (P h)^T by symmetry.
    let mut p = p_prior - &linalg::outer(&gain, &ph);
    linalg::symmetrize(&mut p);
    Ok((theta, p))
}

/// Gaussian density of a scalar residual with variance `z`, floored at
/// [`LIKELIHOOD_FLOOR`].
pub fn gaussian_likelihood(residual: f64, z: f64) -> Result<f64> {
    if z <= 0.0 {
        return Err(Error::Numeric(format!("non-positive variance {z}")));
    }
    let density = (2.0 * std::f64::consts::PI * z).sqrt().recip()
        * (-0.5 * residual * residual / z).exp();
    Ok(density.max(LIKELIHOOD_FLOOR))
}

/// Parameters of the reward filter.
#[derive(Debug, Clone)]
pub struct RewardParams {
    /// Evolution gain applied to `theta` in the prediction step.
    pub f_scale: f64,
    /// Process noise covariance scale; `B = b_scale * I`.
    pub b_scale: f64,
    /// Initial covariance scale; `P0 = p0_scale * I`.
    pub p0_scale: f64,
    /// Candidate measurement noise variances, one bank member each.
    pub omega_candidates: Vec<f64>,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            f_scale: 0.9,
            b_scale: 1e-3,
            p0_scale: 10.0,
            omega_candidates: default_omega_candidates(),
        }
    }
}

/// The standard candidate grid spanning four decades of noise variance.
pub fn default_omega_candidates() -> Vec<f64> {
    vec![0.01, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
}

/// Output of one bank update.
#[derive(Debug, Clone)]
pub struct BankUpdateResult {
    /// Fused posterior mean.
    pub theta: Array1<f64>,
    /// Fused posterior covariance, spread term included.
    pub p: Array2<f64>,
    /// Updated bank weights (on the probability simplex).
    pub bank_weights: Array1<f64>,
    /// Shared measurement residual against the predicted reward.
    pub residual: f64,
    /// Innovation variance of each bank member.
    pub innovation_variances: Vec<f64>,
}

/// Kalman filter for the reward weights with an adaptive noise bank.
#[derive(Debug, Clone)]
pub struct RewardFilter {
    theta: Array1<f64>,
    p: Array2<f64>,
    f_scale: f64,
    b: Array2<f64>,
    omegas: Vec<f64>,
    weights: Array1<f64>,
}

impl RewardFilter {
    pub fn new(l: usize, params: &RewardParams) -> Result<Self> {
        if l == 0 {
            return Err(Error::invalid("l", "feature length must be positive"));
        }
        if params.omega_candidates.is_empty() {
            return Err(Error::invalid("omega_candidates", "need at least one"));
        }
        if params.omega_candidates.iter().any(|&o| o <= 0.0) {
            return Err(Error::invalid("omega_candidates", "must all be positive"));
        }
        if params.p0_scale <= 0.0 {
            return Err(Error::invalid("p0_scale", "must be positive"));
        }
        if params.b_scale < 0.0 {
            return Err(Error::invalid("b_scale", "must be non-negative"));
        }
        let n = params.omega_candidates.len();
        Ok(Self {
            theta: Array1::zeros(l),
            p: Array2::eye(l) * params.p0_scale,
            f_scale: params.f_scale,
            b: Array2::eye(l) * params.b_scale,
            omegas: params.omega_candidates.clone(),
            weights: Array1::from_elem(n, 1.0 / n as f64),
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &Array1<f64> {
        &self.theta
    }

    pub fn covariance(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn bank_weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn omega_candidates(&self) -> &[f64] {
        &self.omegas
    }

    /// Predicted reward `h^T theta` under the current estimate.
    pub fn predicted_reward(&self, h: ArrayView1<f64>) -> f64 {
        h.dot(&self.theta)
    }

    pub fn reset_weights_uniform(&mut self) {
        let n = self.weights.len();
        self.weights.fill(1.0 / n as f64);
    }

    /// Re-initializes the estimate to zero mean and covariance `p0 * I`,
    /// with uniform bank weights.
    pub fn reinitialize(&mut self, p0_scale: f64) {
        self.theta.fill(0.0);
        self.p = Array2::eye(self.theta.len()) * p0_scale;
        self.reset_weights_uniform();
    }

    /// One full bank step on the observation `r ≈ h^T theta`.
    ///
    /// A single prediction is shared by the bank; each member performs its
    /// own measurement update with its candidate variance, weights update by
    /// the Bayes rule on the residual likelihoods, and the fused posterior is
    /// written back. If every likelihood underflows to the floor the weights
    /// reset to uniform.
    pub fn mmae_step(&mut self, h: ArrayView1<f64>, r: f64) -> Result<BankUpdateResult> {
        let (theta_prior, p_prior) = kf_predict(self.theta.view(), &self.p, self.f_scale, &self.b);
        let ph = p_prior.dot(&h);
        let q = h.dot(&ph);
        let residual = r - h.dot(&theta_prior);

        let n_kf = self.omegas.len();
        let mut variances = Vec::with_capacity(n_kf);
        let mut likelihoods = Vec::with_capacity(n_kf);
        for &omega in &self.omegas {
            let z = q + omega;
            variances.push(z);
            likelihoods.push(gaussian_likelihood(residual, z)?);
        }

        if likelihoods.iter().all(|&l| l <= LIKELIHOOD_FLOOR) {
            self.reset_weights_uniform();
        } else {
            let mut sum = 0.0;
            for i in 0..n_kf {
                self.weights[i] *= likelihoods[i];
                sum += self.weights[i];
            }
            if sum > 0.0 && sum.is_finite() {
                self.weights.mapv_inplace(|w| w / sum);
            } else {
                self.reset_weights_uniform();
            }
        }

        // Per-member posteriors from the shared prior, reduced in candidate
        // order.
        let mut fused_theta = Array1::<f64>::zeros(self.theta.len());
        let mut members = Vec::with_capacity(n_kf);
        for i in 0..n_kf {
            let z = variances[i];
            let gain = &ph / z;
            let theta_i = &theta_prior + &(&gain * residual);
            let p_i = &p_prior - &linalg::outer(&gain, &ph);
            fused_theta += &(&theta_i * self.weights[i]);
            members.push((theta_i, p_i));
        }
        let mut fused_p = Array2::<f64>::zeros(self.p.raw_dim());
        for (i, (theta_i, p_i)) in members.iter().enumerate() {
            let d = theta_i - &fused_theta;
            let spread = linalg::outer(&d, &d);
            fused_p += &((p_i + &spread) * self.weights[i]);
        }
        linalg::symmetrize(&mut fused_p);

        self.theta = fused_theta;
        self.p = fused_p;

        Ok(BankUpdateResult {
            theta: self.theta.clone(),
            p: self.p.clone(),
            bank_weights: self.weights.clone(),
            residual,
            innovation_variances: variances,
        })
    }
}
