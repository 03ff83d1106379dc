#![allow(dead_code)]

use adaptsurv::seq_monitor::{spending_value, Sidedness, Spending};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::stats::{norm_cdf, norm_pdf, norm_quantile};
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec, TrialData};

/// Constant-hazard design with Poisson entry at `n / 2` per unit time.
pub fn design(n: usize, allocation: AllocationKind, covariates: ArmCovariates, beta: f64, seed: u64) -> DesignConfig {
    DesignConfig::new(
        n,
        EntryProcess::Poisson { rate: n as f64 / 2.0 },
        allocation,
        HazardSpec::constant(1.0, 0.05, 8.0).unwrap(),
        covariates,
        vec![beta],
        seed,
    )
}

/// A small trial whose covariates switch value part-way through follow-up,
/// with a piecewise hazard and enough censoring to exercise every branch.
pub fn varied_trial(n: usize, beta: f64, switch: bool, seed: u64) -> TrialData {
    let mut covariates = ArmCovariates::symmetric(1.0);
    if switch {
        covariates.switch = Some((0.4, vec![vec![0.5], vec![-0.25]]));
    }
    let cfg = DesignConfig::new(
        n,
        EntryProcess::Poisson { rate: n as f64 / 1.5 },
        AllocationKind::rpw(1, 1, 0.3),
        HazardSpec::new(vec![0.5, 1.5], vec![1.2, 0.7, 1.0], 0.2, 5.0).unwrap(),
        covariates,
        vec![beta],
        seed,
    );
    simulate_trial(&cfg).unwrap().trial
}

/// Two-look two-sided boundaries by direct integration: the first look is
/// a normal quantile, the second solves
/// `∫_{−c₁}^{c₁} φ(z) P(|B(v₂)| ≥ c₂√v₂ | B(v₁) = z√v₁) dz = α₂ − α₁`
/// with a trapezoid rule on `nodes` points and bisection on `c₂`.
pub fn two_look_oracle(v: [f64; 2], alpha: f64, spending: Spending, nodes: usize) -> [f64; 2] {
    let a1 = spending_value(spending, Sidedness::Two, alpha, v[0]);
    let a2 = spending_value(spending, Sidedness::Two, alpha, v[1]);
    let c1 = norm_quantile(1.0 - a1 / 2.0);
    let sd = (v[1] - v[0]).sqrt();
    let h = 2.0 * c1 / (nodes - 1) as f64;
    let second = |c2: f64| {
        let mut total = 0.0;
        for i in 0..nodes {
            let z = -c1 + i as f64 * h;
            let b1 = z * v[0].sqrt();
            let b = c2 * v[1].sqrt();
            let tail = norm_cdf((-b - b1) / sd) + 1.0 - norm_cdf((b - b1) / sd);
            let weight = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
            total += weight * norm_pdf(z) * tail;
        }
        total * h
    };
    let target = a2 - a1;
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if second(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    [c1, 0.5 * (lo + hi)]
}
