//! Property-based invariants over randomized inputs.

use akf_sr::ndarray::{Array1, Array2};
use akf_sr::{
    build_state_action_features, linalg, rbf_activation, RbfSet, RewardFilter, RewardParams,
    SrFilter, SrTdIngredients,
};
use proptest::prelude::*;

fn state2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rbf_activation_stays_in_unit_interval(
        s in state2(),
        mu in state2(),
        scale in 0.05..4.0f64,
    ) {
        let sigma = Array2::<f64>::eye(2) * scale;
        let v = rbf_activation(
            Array1::from_vec(s).view(),
            Array1::from_vec(mu.clone()).view(),
            &sigma,
        )
        .unwrap();
        prop_assert!(v > 0.0 && v <= 1.0);
        let at_center = rbf_activation(
            Array1::from_vec(mu.clone()).view(),
            Array1::from_vec(mu).view(),
            &sigma,
        )
        .unwrap();
        prop_assert_eq!(at_center, 1.0);
    }

    #[test]
    fn state_action_features_are_block_sparse(
        s in state2(),
        action in 0usize..4,
        scale in 0.2..2.0f64,
    ) {
        let centers = vec![
            Array1::from_vec(vec![-1.0, 0.0]),
            Array1::from_vec(vec![1.0, 0.0]),
            Array1::from_vec(vec![0.0, 1.0]),
        ];
        let rbfs = RbfSet::from_centers(centers, scale, true).unwrap();
        let phi = rbfs.state_features(Array1::from_vec(s).view()).unwrap();
        let psi = build_state_action_features(&phi, action, 4).unwrap();
        let n_phi = phi.len();
        for (i, &v) in psi.values().iter().enumerate() {
            let block = i / n_phi;
            if block == action {
                prop_assert_eq!(v, phi.values()[i - action * n_phi]);
            } else {
                prop_assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn bank_weights_stay_on_the_simplex(
        seed in 0u64..1_000,
        omegas in prop::collection::vec(0.01..50.0f64, 1..6),
        rewards in prop::collection::vec(-5.0..5.0f64, 1..40),
    ) {
        let params = RewardParams {
            omega_candidates: omegas,
            ..RewardParams::default()
        };
        let mut filter = RewardFilter::new(3, &params).unwrap();
        let mut h_rng = rand::rngs::StdRng::seed_from_u64(seed);
        use rand::{Rng, SeedableRng};
        for r in rewards {
            let h = Array1::from_iter((0..3).map(|_| h_rng.random_range(-2.0..2.0)));
            let out = filter.mmae_step(h.view(), r).unwrap();
            let sum: f64 = out.bank_weights.sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            prop_assert!(out.bank_weights.iter().all(|&w| w >= 0.0));
            prop_assert!(linalg::min_symmetric_eigenvalue(&out.p) >= -1e-10);
        }
    }

    #[test]
    fn factored_and_dense_successor_filters_agree(
        l in 1usize..5,
        c0 in 0.5..10.0f64,
        u in 0.0..0.1f64,
        e in 0.2..2.0f64,
        a in 0.5..1.0f64,
        seed in 0u64..1_000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut fact = SrFilter::isotropic(l, c0, u, e, a).unwrap();
        let mut dense = SrFilter::dense_isotropic(l, c0, u, e, a).unwrap();
        for _ in 0..10 {
            let ing = SrTdIngredients {
                psi: Array1::from_iter((0..l).map(|_| rng.random_range(-1.0..1.0))),
                g: Array1::from_iter((0..l).map(|_| rng.random_range(-1.0..1.0))),
            };
            fact.ktd_step(&ing).unwrap();
            dense.ktd_step(&ing).unwrap();
        }
        let wf = fact.weight_vec();
        let wd = dense.weight_vec();
        for i in 0..l * l {
            prop_assert!((wf[i] - wd[i]).abs() <= 1e-9 * wd[i].abs().max(1.0));
        }
    }
}
