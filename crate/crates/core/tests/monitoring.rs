mod common;

use adaptsurv::seq_monitor::{monitor_trial, Action, MonitoringPlan, Sidedness, Spending};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::{ArmCovariates, CovariatePath, Subject, TrialData};
use proptest::prelude::*;

use common::design;

fn plan() -> MonitoringPlan {
    MonitoringPlan::equally_spaced(3, 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap()
}

/// Rewrite everything not yet observable at calendar time `t`: later
/// entrants get the opposite covariate, and pending follow-up is stretched
/// with the event indicator flipped.
fn rewrite_future(data: &TrialData, t: f64) -> TrialData {
    let subjects = data
        .subjects()
        .iter()
        .map(|s| {
            if s.entry_time > t {
                let z = -s.z(0.0)[0];
                Subject::observed(
                    s.entry_time,
                    CovariatePath::constant(&[z]),
                    s.arm,
                    s.observed_time,
                    s.event,
                )
                .unwrap()
            } else if s.completion_time() > t {
                let pending = t - s.entry_time;
                let stretched = pending + 2.0 * (s.completion_time() - t);
                Subject::observed(s.entry_time, s.covariates.clone(), s.arm, stretched, !s.event).unwrap()
            } else {
                s.clone()
            }
        })
        .collect();
    TrialData::new(subjects, data.horizon()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decisions_use_no_data_past_the_last_evaluation(seed in any::<u64>(), beta in -0.4f64..0.4) {
        let cfg = design(150, AllocationKind::rpw(1, 1, 0.5), ArmCovariates::symmetric(1.5), beta, seed);
        let data = simulate_trial(&cfg).unwrap().trial;
        let plan = plan();
        let outcome = monitor_trial(&data, &plan, 0.0, cfg.planned_information).unwrap();
        let through = outcome.evaluated_through.unwrap();
        let truncated = monitor_trial(&data.observed_at(through), &plan, 0.0, cfg.planned_information).unwrap();
        prop_assert_eq!(&outcome, &truncated);
        let rewritten = monitor_trial(&rewrite_future(&data, through), &plan, 0.0, cfg.planned_information).unwrap();
        prop_assert_eq!(&outcome.decisions, &rewritten.decisions);
    }
}

#[test]
fn monitoring_stops_at_first_rejection() {
    let plan = plan();
    let mut rejected = 0;
    for seed in 0..40 {
        let cfg = design(
            200,
            AllocationKind::rpw(1, 1, 0.5),
            ArmCovariates::symmetric(1.5),
            0.35,
            seed,
        );
        let data = simulate_trial(&cfg).unwrap().trial;
        let outcome = monitor_trial(&data, &plan, 0.0, cfg.planned_information).unwrap();
        if let Some(k) = outcome.stopping_look() {
            rejected += 1;
            assert_eq!(outcome.decisions.len(), k);
            assert!(outcome.decisions[..k - 1].iter().all(|d| d.action == Action::Continue));
            let last = &outcome.decisions[k - 1];
            assert!(last.z_statistic.unwrap().abs() >= last.boundary.unwrap());
            assert_eq!(outcome.evaluated_through, last.sigma_hat);
        }
    }
    assert!(
        rejected > 20,
        "a strong effect should usually be detected ({rejected}/40)"
    );
}

#[test]
fn unreachable_looks_accept() {
    let cfg = design(
        60,
        AllocationKind::CompleteRandomization { p: 0.5 },
        ArmCovariates::binary(),
        0.0,
        3,
    );
    let data = simulate_trial(&cfg).unwrap().trial;
    // V_n far above anything binary codes can deliver.
    let outcome = monitor_trial(&data, &plan(), 0.0, 10.0 * cfg.planned_information).unwrap();
    assert!(outcome.decisions.iter().all(|d| d.action == Action::AcceptFailToReach));
    assert!(outcome.decisions.iter().all(|d| d.bhat.is_none()));
}
