mod common;

use adaptsurv::seq_monitor::{spending_value, MonitoringPlan, Sidedness, Spending};
use adaptsurv::stats::{norm_cdf, norm_quantile};

use common::two_look_oracle;

#[test]
fn two_look_obrien_fleming_matches_dense_grid() {
    let plan = MonitoringPlan::new(vec![0.5, 1.0], 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap();
    // Ten times the resolution of the recursion's default grid.
    let oracle = two_look_oracle([0.5, 1.0], 0.05, Spending::ObrienFlemingType, 40_001);
    for k in 0..2 {
        assert!(
            (plan.boundaries[k] - oracle[k]).abs() < 5e-3,
            "{:?} vs {:?}",
            plan.boundaries,
            oracle
        );
    }
    assert!((plan.boundaries[0] - 2.963).abs() < 5e-3);
    assert!((plan.boundaries[1] - 1.969).abs() < 5e-3);
}

#[test]
fn two_look_oracle_agrees_for_other_families_and_uneven_looks() {
    for spending in [Spending::PocockType, Spending::Linear, Spending::ObrienFlemingType] {
        let v = [0.3, 0.8];
        let plan = MonitoringPlan::new(v.to_vec(), 0.05, spending, Sidedness::Two).unwrap();
        let oracle = two_look_oracle(v, 0.05, spending, 40_001);
        for k in 0..2 {
            assert!(
                (plan.boundaries[k] - oracle[k]).abs() < 1e-3,
                "{spending:?}: {:?} vs {oracle:?}",
                plan.boundaries
            );
        }
    }
}

#[test]
fn single_look_is_the_normal_quantile() {
    let plan = MonitoringPlan::equally_spaced(1, 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap();
    assert!((plan.boundaries[0] - 1.95996).abs() < 1e-4);
    let one = MonitoringPlan::equally_spaced(1, 0.05, Spending::PocockType, Sidedness::One).unwrap();
    assert!((one.boundaries[0] - 1.64485).abs() < 1e-4);
}

#[test]
fn pocock_boundaries_are_nearly_flat() {
    let plan = MonitoringPlan::equally_spaced(5, 0.05, Spending::PocockType, Sidedness::Two).unwrap();
    let max = plan.boundaries.iter().copied().fold(f64::MIN, f64::max);
    let min = plan.boundaries.iter().copied().fold(f64::MAX, f64::min);
    assert!(max - min < 0.15, "{:?}", plan.boundaries);
}

#[test]
fn obrien_fleming_boundaries_decrease() {
    let plan = MonitoringPlan::equally_spaced(5, 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap();
    assert!(plan.boundaries.windows(2).all(|w| w[0] > w[1]), "{:?}", plan.boundaries);
}

#[test]
fn spending_functions_match_their_closed_forms() {
    let alpha = 0.05;
    for v in [0.1, 0.25, 0.5, 0.9] {
        let obf_two = 4.0 * (1.0 - norm_cdf(norm_quantile(1.0 - alpha / 4.0) / f64::sqrt(v)));
        let obf_one = 2.0 * (1.0 - norm_cdf(norm_quantile(1.0 - alpha / 2.0) / f64::sqrt(v)));
        let pocock = alpha * (1.0 + (std::f64::consts::E - 1.0) * v).ln();
        assert!((spending_value(Spending::ObrienFlemingType, Sidedness::Two, alpha, v) - obf_two).abs() < 1e-14);
        assert!((spending_value(Spending::ObrienFlemingType, Sidedness::One, alpha, v) - obf_one).abs() < 1e-14);
        assert!((spending_value(Spending::PocockType, Sidedness::Two, alpha, v) - pocock).abs() < 1e-14);
        assert!((spending_value(Spending::Linear, Sidedness::Two, alpha, v) - alpha * v).abs() < 1e-15);
    }
}
