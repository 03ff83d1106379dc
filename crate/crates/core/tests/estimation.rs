mod common;

use adaptsurv::cox_engine::{score, ScoreVariant};
use adaptsurv::estimator::{solve_mple, MpleOptions};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::ArmCovariates;
use proptest::prelude::*;

use common::design;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn estimate_is_a_root_and_does_not_depend_on_the_start(
        seed in any::<u64>(),
        beta in -0.7f64..0.7,
        start in -1.0f64..1.0,
        theta_frac in 0.3f64..=1.0,
    ) {
        let cfg = design(150, AllocationKind::rpw(1, 1, 0.5), ArmCovariates::symmetric(1.0), beta, seed);
        let data = simulate_trial(&cfg).unwrap().trial;
        let t = cfg.horizon();
        let theta = theta_frac * t;
        let opts = MpleOptions::default();
        let from_zero = solve_mple(&data, t, theta, &[0.0], &opts).unwrap();
        let from_start = solve_mple(&data, t, theta, &[start], &opts).unwrap();
        prop_assert!(from_zero.converged && from_start.converged);
        prop_assert!((from_zero.beta_hat[0] - from_start.beta_hat[0]).abs() < 1e-8);
        let at_root = score(&data, &from_zero.beta_hat, t, theta, ScoreVariant::SubsampleRiskset).unwrap();
        prop_assert!(at_root.score[0].abs() < 1e-8);
        // Interval is symmetric about the estimate with half-width 1.96·SE.
        let [lo, hi] = from_zero.ci_95[0];
        let se = (1.0 / at_root.information[(0, 0)]).sqrt();
        prop_assert!((hi - lo - 2.0 * 1.959964 * se).abs() < 1e-6);
        prop_assert!(((lo + hi) / 2.0 - from_zero.beta_hat[0]).abs() < 1e-12);
    }
}

#[test]
fn log_likelihood_is_maximised_at_the_estimate() {
    let cfg = design(
        200,
        AllocationKind::rpw(1, 1, 0.5),
        ArmCovariates::symmetric(1.5),
        0.3,
        9,
    );
    let data = simulate_trial(&cfg).unwrap().trial;
    let t = cfg.horizon();
    let fit = solve_mple(&data, t, t, &[0.0], &MpleOptions::default()).unwrap();
    let ll = |b: f64| score(&data, &[b], t, t, ScoreVariant::SubsampleRiskset).unwrap().loglik;
    let best = ll(fit.beta_hat[0]);
    for step in [-0.1, -0.01, -1e-4, 1e-4, 0.01, 0.1] {
        assert!(ll(fit.beta_hat[0] + step) < best);
    }
}
