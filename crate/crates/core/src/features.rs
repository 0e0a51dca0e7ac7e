//! State feature construction.
//!
//! States are mapped to feature vectors either by a set of Gaussian radial
//! basis functions (continuous state spaces) or by one-hot indicators
//! (discrete state spaces). State-action features embed the state features
//! into the block belonging to the chosen action, with all other blocks zero.
//!
//! The RBF means and covariances are adaptable online by a restricted
//! gradient descent rule that changes exactly one parameter family per call,
//! selected by the sign of the predicted reward.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;

/// Eigenvalue floor applied to RBF covariances after a gradient update.
pub const PD_EIGEN_FLOOR: f64 = 1e-8;

/// Gaussian radial basis activation `exp(-1/2 (s-mu)^T Sigma^{-1} (s-mu))`.
///
/// `sigma` must be symmetric positive definite; a failed Cholesky
/// factorization is reported as an invalid-parameter error.
pub fn rbf_activation(s: ArrayView1<f64>, mu: ArrayView1<f64>, sigma: &Array2<f64>) -> Result<f64> {
    if s.len() != mu.len() || sigma.nrows() != s.len() || sigma.ncols() != s.len() {
        return Err(Error::invalid("sigma", "dimension mismatch"));
    }
    let l = linalg::cholesky(sigma)?;
    let d = &s.to_owned() - &mu.to_owned();
    let y = linalg::forward_substitute(&l, &d);
    let q: f64 = y.iter().map(|v| v * v).sum();
    Ok((-0.5 * q).exp())
}

/// A collection of Gaussian basis functions plus an optional bias feature.
#[derive(Debug, Clone)]
pub struct RbfSet {
    centers: Vec<Array1<f64>>,
    covariances: Vec<Array2<f64>>,
    // Cached inverses; refreshed whenever a covariance changes.
    inv_covariances: Vec<Array2<f64>>,
    include_bias: bool,
}

impl RbfSet {
    /// Builds a set from explicit centers and covariances. Every covariance
    /// must be symmetric positive definite.
    pub fn new(
        centers: Vec<Array1<f64>>,
        covariances: Vec<Array2<f64>>,
        include_bias: bool,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("centers", "need at least one basis function"));
        }
        if centers.len() != covariances.len() {
            return Err(Error::invalid(
                "covariances",
                "centers and covariances must have equal length",
            ));
        }
        let dim = centers[0].len();
        let mut inv = Vec::with_capacity(covariances.len());
        for (mu, sigma) in centers.iter().zip(&covariances) {
            if mu.len() != dim || sigma.nrows() != dim || sigma.ncols() != dim {
                return Err(Error::invalid("centers", "inconsistent dimensions"));
            }
            inv.push(linalg::spd_inverse(sigma)?);
        }
        Ok(Self {
            centers,
            covariances,
            inv_covariances: inv,
            include_bias,
        })
    }

    /// Builds a set from explicit centers with the shared isotropic
    /// covariance `sigma_scale * I`.
    pub fn from_centers(
        centers: Vec<Array1<f64>>,
        sigma_scale: f64,
        include_bias: bool,
    ) -> Result<Self> {
        if sigma_scale <= 0.0 {
            return Err(Error::invalid("sigma_scale", "must be positive"));
        }
        let dim = centers.first().map(|c| c.len()).unwrap_or(0);
        let cov = Array2::<f64>::eye(dim) * sigma_scale;
        let covs = vec![cov; centers.len()];
        Self::new(centers, covs, include_bias)
    }

    /// Builds an evenly spaced grid of `order` centers per dimension over the
    /// given ranges. The default covariance is `(2 / (order - 1)) * I`, or
    /// `I` when `order == 1`; pass `sigma_scale` to override.
    pub fn even_grid(
        ranges: &[(f64, f64)],
        order: usize,
        include_bias: bool,
        sigma_scale: Option<f64>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("order", "must be at least 1"));
        }
        if ranges.is_empty() {
            return Err(Error::invalid("ranges", "need at least one dimension"));
        }
        let axes: Vec<Vec<f64>> = ranges
            .iter()
            .map(|&(lo, hi)| {
                if order == 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..order)
                        .map(|i| lo + (hi - lo) * i as f64 / (order - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let centers = cartesian_product(&axes);
        let sigma = sigma_scale.unwrap_or(if order > 1 {
            2.0 / (order - 1) as f64
        } else {
            1.0
        });
        Self::from_centers(centers, sigma, include_bias)
    }

    pub fn n_rbf(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }

    pub fn include_bias(&self) -> bool {
        self.include_bias
    }

    /// Length of the state feature vector: basis count plus bias.
    pub fn feature_len(&self) -> usize {
        self.n_rbf() + usize::from(self.include_bias)
    }

    pub fn centers(&self) -> &[Array1<f64>] {
        &self.centers
    }

    pub fn covariances(&self) -> &[Array2<f64>] {
        &self.covariances
    }

    /// Evaluates the feature vector `[1?, phi_1, ..., phi_N]` at `s`. The
    /// bias entry, when present, sits at index 0 and is exactly 1.
    pub fn state_features(&self, s: ArrayView1<f64>) -> Result<StateFeatures> {
        if s.len() != self.dim() {
            return Err(Error::invalid("state", "dimension mismatch"));
        }
        let mut values = Array1::<f64>::zeros(self.feature_len());
        let offset = usize::from(self.include_bias);
        if self.include_bias {
            values[0] = 1.0;
        }
        for (n, (mu, inv)) in self.centers.iter().zip(&self.inv_covariances).enumerate() {
            let d = &s.to_owned() - mu;
            let q = d.dot(&inv.dot(&d));
            values[offset + n] = (-0.5 * q).exp();
        }
        Ok(StateFeatures { values })
    }
}

/// Feature vector of a state; entries lie in `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    values: Array1<f64>,
}

impl StateFeatures {
    pub fn new(values: Array1<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Feature vector of a state-action pair: the state features placed in the
/// block belonging to the action, zeros elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionFeatures {
    values: Array1<f64>,
    action_index: usize,
}

impl StateActionFeatures {
    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn action_index(&self) -> usize {
        self.action_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }
}

/// Embeds state features into the action block `a` of a vector of length
/// `phi.len() * n_actions`.
pub fn build_state_action_features(
    phi: &StateFeatures,
    action: usize,
    n_actions: usize,
) -> Result<StateActionFeatures> {
    if action >= n_actions {
        return Err(Error::OutOfRange {
            what: "action",
            got: action,
            limit: n_actions,
        });
    }
    let n_phi = phi.len();
    let mut values = Array1::<f64>::zeros(n_phi * n_actions);
    let start = action * n_phi;
    for i in 0..n_phi {
        values[start + i] = phi.values()[i];
    }
    Ok(StateActionFeatures {
        values,
        action_index: action,
    })
}

/// Which parameter family a restricted gradient step touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RgdBranch {
    Means,
    Covariances,
    NoOp,
}

/// Restricted gradient descent on the RBF means and covariances.
///
/// The squared reward residual `(r - psi^T theta)^2` is the loss. When the
/// predicted reward `theta^T psi` is negative (and the loss nonzero) only the
/// covariances move; otherwise only the means move. Updated covariances are
/// symmetrized and eigenvalue-clamped at [`PD_EIGEN_FLOOR`] so they stay
/// positive definite.
pub fn rgd_update(
    rbfs: &mut RbfSet,
    s: ArrayView1<f64>,
    psi: &StateActionFeatures,
    theta: ArrayView1<f64>,
    reward: f64,
    lambda_mu: f64,
    lambda_sigma: f64,
) -> Result<RgdBranch> {
    if lambda_mu <= 0.0 {
        return Err(Error::invalid("lambda_mu", "must be positive"));
    }
    if lambda_sigma <= 0.0 {
        return Err(Error::invalid("lambda_sigma", "must be positive"));
    }
    if theta.len() != psi.len() {
        return Err(Error::invalid("theta", "length must match psi"));
    }

    let predicted = psi.values().dot(&theta);
    let residual = reward - predicted;
    let loss = residual * residual;
    if loss == 0.0 {
        return Ok(RgdBranch::NoOp);
    }
    // Shared scalar factor of both gradient expressions.
    let scale = 2.0 * loss.sqrt() * predicted;
    if scale == 0.0 {
        return Ok(RgdBranch::NoOp);
    }

    if predicted < 0.0 {
        for n in 0..rbfs.centers.len() {
            let d = &s.to_owned() - &rbfs.centers[n];
            let v = rbfs.inv_covariances[n].dot(&d);
            let mut sigma = rbfs.covariances[n].clone();
            let c = lambda_sigma * scale;
            for i in 0..sigma.nrows() {
                for j in 0..sigma.ncols() {
                    sigma[[i, j]] += c * v[i] * v[j];
                }
            }
            let clamped = linalg::clamp_spd(&sigma, PD_EIGEN_FLOOR);
            rbfs.inv_covariances[n] = linalg::spd_inverse(&clamped)?;
            rbfs.covariances[n] = clamped;
        }
        Ok(RgdBranch::Covariances)
    } else {
        for n in 0..rbfs.centers.len() {
            let d = &s.to_owned() - &rbfs.centers[n];
            let v = rbfs.inv_covariances[n].dot(&d);
            let c = lambda_mu * scale;
            for i in 0..rbfs.centers[n].len() {
                rbfs.centers[n][i] += c * v[i];
            }
        }
        Ok(RgdBranch::Means)
    }
}

/// How states are turned into feature vectors.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    Rbf(RbfSet),
    /// One-hot indicators for integer-valued states; the state vector holds
    /// the index in its first component.
    OneHot(usize),
}

impl FeatureMap {
    pub fn feature_len(&self) -> usize {
        match self {
            FeatureMap::Rbf(r) => r.feature_len(),
            FeatureMap::OneHot(n) => *n,
        }
    }

    pub fn state_features(&self, s: ArrayView1<f64>) -> Result<StateFeatures> {
        match self {
            FeatureMap::Rbf(r) => r.state_features(s),
            FeatureMap::OneHot(n) => {
                let idx = s[0].round();
                if idx < 0.0 || idx >= *n as f64 {
                    return Err(Error::OutOfRange {
                        what: "state index",
                        got: idx.max(0.0) as usize,
                        limit: *n,
                    });
                }
                let mut values = Array1::<f64>::zeros(*n);
                values[idx as usize] = 1.0;
                Ok(StateFeatures { values })
            }
        }
    }

    pub fn rbf(&self) -> Option<&RbfSet> {
        match self {
            FeatureMap::Rbf(r) => Some(r),
            FeatureMap::OneHot(_) => None,
        }
    }

    pub fn rbf_mut(&mut self) -> Option<&mut RbfSet> {
        match self {
            FeatureMap::Rbf(r) => Some(r),
            FeatureMap::OneHot(_) => None,
        }
    }
}

fn cartesian_product(axes: &[Vec<f64>]) -> Vec<Array1<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(Array1::from_vec).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn pendulum_rbfs() -> RbfSet {
        let mut centers = Vec::new();
        for &a in &[-std::f64::consts::FRAC_PI_4, 0.0, std::f64::consts::FRAC_PI_4] {
            for &b in &[-0.5, 0.0, 0.5] {
                centers.push(array![a, b]);
            }
        }
        RbfSet::from_centers(centers, 1.0, true).unwrap()
    }

    #[test]
    fn activation_is_one_at_center() {
        let mu = array![0.3, -0.7];
        let sigma = array![[2.0, 0.3], [0.3, 1.0]];
        let v = rbf_activation(mu.view(), mu.view(), &sigma).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 0.0);
    }

    #[test]
    fn activation_unit_offset_identity_covariance() {
        let mu = array![0.0, 0.0];
        let s = array![1.0, 0.0];
        let sigma = Array2::<f64>::eye(2);
        let v = rbf_activation(s.view(), mu.view(), &sigma).unwrap();
        assert_abs_diff_eq!(v, (-0.5f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn activation_rejects_singular_covariance() {
        let mu = array![0.0, 0.0];
        let s = array![1.0, 0.0];
        let sigma = array![[1.0, 1.0], [1.0, 1.0]]; // eigenvalues 2, 0
        assert!(rbf_activation(s.view(), mu.view(), &sigma).is_err());
    }

    #[test]
    fn pendulum_features_have_length_ten_with_leading_bias() {
        let rbfs = pendulum_rbfs();
        let phi = rbfs.state_features(array![0.1, 0.0].view()).unwrap();
        assert_eq!(phi.len(), 10);
        assert_abs_diff_eq!(phi.values()[0], 1.0, epsilon = 0.0);
        assert!(phi.values().iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn feature_at_center_is_one() {
        let rbfs = pendulum_rbfs();
        let center = rbfs.centers()[4].clone();
        let phi = rbfs.state_features(center.view()).unwrap();
        assert_abs_diff_eq!(phi.values()[1 + 4], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn state_action_block_layout() {
        let rbfs = pendulum_rbfs();
        let phi = rbfs.state_features(array![0.0, 0.0].view()).unwrap();
        let psi = build_state_action_features(&phi, 0, 3).unwrap();
        assert_eq!(psi.len(), 30);
        assert_abs_diff_eq!(psi.values()[0], 1.0, epsilon = 0.0);
        for i in 10..30 {
            assert_eq!(psi.values()[i], 0.0);
        }
        let psi2 = build_state_action_features(&phi, 2, 3).unwrap();
        let off_block: f64 = psi2.values().iter().take(20).map(|v| v.abs()).sum();
        assert_eq!(off_block, 0.0);
        assert!(build_state_action_features(&phi, 3, 3).is_err());
    }

    #[test]
    fn activation_decays_along_ray() {
        let rbfs = pendulum_rbfs();
        let mu = rbfs.centers()[0].clone();
        let dir = array![0.3, 0.4];
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let s = &mu + &(&dir * (k as f64 * 0.25));
            let v = rbf_activation(s.view(), mu.view(), &rbfs.covariances()[0]).unwrap();
            assert!(v < prev || k == 0);
            prev = v;
        }
    }

    #[test]
    fn rgd_zero_loss_is_noop() {
        let mut rbfs = pendulum_rbfs();
        let phi = rbfs.state_features(array![0.1, 0.2].view()).unwrap();
        let psi = build_state_action_features(&phi, 1, 3).unwrap();
        // theta chosen so that psi^T theta equals the reward exactly.
        let mut theta = Array1::<f64>::zeros(30);
        theta[10] = 2.0; // bias slot of block 1
        let reward = psi.values().dot(&theta);
        let before = rbfs.clone();
        let branch = rgd_update(
            &mut rbfs,
            array![0.1, 0.2].view(),
            &psi,
            theta.view(),
            reward,
            200.0,
            100.0,
        )
        .unwrap();
        assert_eq!(branch, RgdBranch::NoOp);
        for (a, b) in before.centers().iter().zip(rbfs.centers()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rgd_positive_projection_moves_means_only() {
        let mut rbfs = pendulum_rbfs();
        let s = array![0.1, 0.2];
        let phi = rbfs.state_features(s.view()).unwrap();
        let psi = build_state_action_features(&phi, 0, 3).unwrap();
        let mut theta = Array1::<f64>::zeros(30);
        theta[0] = 0.5;
        let before = rbfs.clone();
        let branch =
            rgd_update(&mut rbfs, s.view(), &psi, theta.view(), 1.0, 0.01, 0.01).unwrap();
        assert_eq!(branch, RgdBranch::Means);
        assert!(before
            .centers()
            .iter()
            .zip(rbfs.centers())
            .any(|(a, b)| a != b));
        for (a, b) in before.covariances().iter().zip(rbfs.covariances()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rgd_negative_projection_updates_covariances_and_keeps_them_spd() {
        let mut rbfs = pendulum_rbfs();
        let s = array![0.3, -0.1];
        let phi = rbfs.state_features(s.view()).unwrap();
        let psi = build_state_action_features(&phi, 1, 3).unwrap();
        let mut theta = Array1::<f64>::zeros(30);
        theta[10] = -2.0; // negative predicted reward
        let before = rbfs.clone();
        let branch =
            rgd_update(&mut rbfs, s.view(), &psi, theta.view(), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(branch, RgdBranch::Covariances);
        for (a, b) in before.centers().iter().zip(rbfs.centers()) {
            assert_eq!(a, b);
        }
        // 2x2 eigenvalue check via the closed form, independent of the
        // Jacobi routine used by the implementation.
        for sigma in rbfs.covariances() {
            let (a, b, c) = (sigma[[0, 0]], sigma[[0, 1]], sigma[[1, 1]]);
            let tr = a + c;
            let det = a * c - b * b;
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            let min_eig = tr / 2.0 - disc;
            assert!(min_eig > 0.0, "covariance lost positive definiteness");
        }
    }

    #[test]
    fn one_hot_features() {
        let map = FeatureMap::OneHot(4);
        let phi = map.state_features(array![2.0].view()).unwrap();
        assert_eq!(phi.values().as_slice().unwrap(), &[0.0, 0.0, 1.0, 0.0]);
        assert!(map.state_features(array![4.0].view()).is_err());
    }

    #[test]
    fn even_grid_counts_and_default_width() {
        let rbfs = RbfSet::even_grid(&[(-1.0, 1.0), (0.0, 2.0)], 3, false, None).unwrap();
        assert_eq!(rbfs.n_rbf(), 9);
        assert_eq!(rbfs.feature_len(), 9);
        assert_abs_diff_eq!(rbfs.covariances()[0][[0, 0]], 1.0, epsilon = 0.0);
        let c0 = &rbfs.centers()[0];
        assert_abs_diff_eq!(c0[0], -1.0, epsilon = 0.0);
        assert_abs_diff_eq!(c0[1], 0.0, epsilon = 0.0);
    }
}
