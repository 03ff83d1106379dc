mod common;

use adaptsurv::cox_engine::{score, EventRiskTable, ScoreVariant};
use adaptsurv::info_time::{bhat_path, information_path, sigma_hat};
use adaptsurv::mc_validate::oracle_score;
use adaptsurv::trial_core::TrialData;
use proptest::prelude::*;

use common::varied_trial;

const VARIANTS: [ScoreVariant; 2] = [ScoreVariant::FullRiskset, ScoreVariant::SubsampleRiskset];

fn scaled(data: &TrialData, c: f64, shift: f64) -> TrialData {
    data.map_covariates(|path| path.map_values(|z| z.iter().map(|x| c * x + shift).collect()).unwrap())
        .unwrap()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_matches_brute_force_oracle(
        n in 2usize..=50,
        seed in any::<u64>(),
        switch in any::<bool>(),
        beta in -1.5f64..1.5,
        t_frac in 0.05f64..1.0,
        theta_frac in 0.0f64..=1.0,
    ) {
        let data = varied_trial(n, 0.4, switch, seed);
        let t = t_frac * data.horizon();
        let theta = theta_frac * t;
        for variant in VARIANTS {
            let engine = score(&data, &[beta], t, theta, variant).unwrap();
            let oracle = oracle_score(&data, &[beta], t, theta, variant).unwrap();
            prop_assert!((engine.score[0] - oracle[0]).abs() < 1e-12,
                "{variant:?}: engine {} oracle {}", engine.score[0], oracle[0]);
        }
    }

    #[test]
    fn event_table_reproduces_direct_score(
        n in 2usize..=40,
        seed in any::<u64>(),
        beta in -1.0f64..1.0,
        t_frac in 0.05f64..1.0,
        theta_frac in 0.0f64..=1.0,
    ) {
        let data = varied_trial(n, -0.3, true, seed);
        let table = EventRiskTable::new(&data, &[beta]).unwrap();
        let t = t_frac * data.horizon();
        let theta = theta_frac * t;
        for variant in VARIANTS {
            let direct = score(&data, &[beta], t, theta, variant).unwrap();
            let tabled = table.evaluate(t, theta, variant).unwrap();
            prop_assert_eq!(direct, tabled);
        }
    }

    #[test]
    fn variants_coincide_when_cutoff_is_calendar_time(
        n in 2usize..=40,
        seed in any::<u64>(),
        t_frac in 0.05f64..1.0,
    ) {
        let data = varied_trial(n, 0.2, false, seed);
        let t = t_frac * data.horizon();
        let full = score(&data, &[0.1], t, t, ScoreVariant::FullRiskset).unwrap();
        let sub = score(&data, &[0.1], t, t, ScoreVariant::SubsampleRiskset).unwrap();
        prop_assert_eq!(full.score, sub.score);
        prop_assert_eq!(full.vhat, sub.vhat);
    }

    #[test]
    fn rescaling_covariates_rescales_score_and_information(
        n in 2usize..=40,
        seed in any::<u64>(),
        c in 0.2f64..5.0,
        beta in -1.0f64..1.0,
        t_frac in 0.05f64..1.0,
    ) {
        let data = varied_trial(n, 0.3, true, seed);
        let stretched = scaled(&data, c, 0.0);
        let t = t_frac * data.horizon();
        for variant in VARIANTS {
            let a = score(&data, &[beta], t, t * 0.7, variant).unwrap();
            let b = score(&stretched, &[beta / c], t, t * 0.7, variant).unwrap();
            prop_assert!(close(b.score[0], c * a.score[0], 1e-10));
            prop_assert!(close(b.vhat[(0, 0)], c * c * a.vhat[(0, 0)], 1e-10));
            prop_assert!(close(b.information[(0, 0)], c * c * a.information[(0, 0)], 1e-10));
        }
    }

    #[test]
    fn rescaled_score_is_invariant_to_covariate_units_and_origin(
        n in 5usize..=50,
        seed in any::<u64>(),
        c in 0.3f64..3.0,
        shift in -2.0f64..2.0,
    ) {
        let data = varied_trial(n, 0.0, false, seed);
        let moved = scaled(&data, c, shift);
        let planned = n as f64 / 4.0;
        let grid = [0.25, 0.5, 0.75, 1.0];
        let a = bhat_path(&data, 0.0, &grid, planned).unwrap();
        let b = bhat_path(&moved, 0.0, &grid, c * c * planned).unwrap();
        for (k, &v) in grid.iter().enumerate() {
            match (a.bhat[k], b.bhat[k]) {
                (Some(x), Some(y)) => {
                    prop_assert_eq!(a.sigma_hat[k], b.sigma_hat[k]);
                    prop_assert!(close(x, y, 1e-9), "v={}: {} vs {}", v, x, y);
                }
                (None, None) => {}
                // A fraction sitting exactly on an attained value may flip
                // under roundoff; anything else is a real disagreement.
                _ => prop_assert!(a.attained[k].or(b.attained[k]).is_some_and(|x| close(x, v, 1e-9))),
            }
        }
    }

    #[test]
    fn first_passage_time_is_monotone_in_fraction(
        n in 5usize..=50,
        seed in any::<u64>(),
        v1 in 0.01f64..1.0,
        v2 in 0.01f64..1.0,
    ) {
        let data = varied_trial(n, 0.5, true, seed);
        let path = information_path(&data, 0.0, n as f64 / 4.0).unwrap();
        let (lo, hi) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
        if let Ok(s_hi) = sigma_hat(&path, hi) {
            let s_lo = sigma_hat(&path, lo).unwrap();
            prop_assert!(s_lo.time <= s_hi.time);
            prop_assert!(s_lo.attained >= lo && s_hi.attained >= hi);
        }
    }
}

#[test]
fn rescaled_score_recomputed_by_hand_on_five_events() {
    use adaptsurv::trial_core::{CovariatePath, Subject};
    // Five events among six subjects, Z = ±1, β = 0.
    let rows = [
        (0.0, 1.0, 1.0, true),
        (0.2, -1.0, 0.5, true),
        (0.4, 1.0, 2.0, false),
        (0.6, -1.0, 0.3, true),
        (0.9, 1.0, 0.8, true),
        (1.1, -1.0, 1.4, true),
    ];
    let subjects = rows
        .iter()
        .map(|&(u, z, time, event)| Subject::observed(u, CovariatePath::constant(&[z]), 0, time, event).unwrap())
        .collect();
    let data = TrialData::new(subjects, 5.0).unwrap();

    // Calendar event times: 0.7, 0.9, 1.0, 1.7, 2.5. At each, V̂ is the sum
    // over counted events of (Z − Z̄)² with the full risk set of that t.
    let mut calendar: Vec<f64> = rows.iter().filter(|r| r.3).map(|r| r.0 + r.2).collect();
    calendar.sort_by(f64::total_cmp);
    let vhat_at = |t: f64| -> f64 {
        let mut total = 0.0;
        for &(u, z, time, event) in &rows {
            if !event || u + time > t {
                continue;
            }
            let at_risk: Vec<f64> = rows
                .iter()
                .filter(|r| r.0 + time <= t && r.2 >= time)
                .map(|r| r.1)
                .collect();
            let zbar = at_risk.iter().sum::<f64>() / at_risk.len() as f64;
            total += (z - zbar).powi(2);
        }
        total
    };
    let planned = 2.0;
    let grid = [0.25, 0.5, 0.75, 1.0];
    let path = bhat_path(&data, 0.0, &grid, planned).unwrap();
    for (k, &v) in grid.iter().enumerate() {
        let hit = calendar.iter().copied().find(|&t| vhat_at(t) / planned >= v);
        match hit {
            Some(t) => {
                let u = oracle_score(&data, &[0.0], t, t, ScoreVariant::FullRiskset).unwrap()[0];
                assert_eq!(path.sigma_hat[k], Some(t));
                assert!((path.bhat[k].unwrap() - u / planned.sqrt()).abs() < 1e-12);
            }
            None => assert!(!path.reached(k)),
        }
    }
    assert!(path.reached(0), "the grid must exercise at least one reached look");
}
