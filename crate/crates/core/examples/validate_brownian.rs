//! Monte Carlo check that B̂_n(v) behaves like Brownian motion under
//! play-the-winner allocation: means, variances, disjoint increments and
//! a Kolmogorov–Smirnov distance at each information fraction.
//!
//! cargo run --release --example validate_brownian [replicates]

use adaptsurv::mc_validate::{brownian_diagnostics, run_replicates, ValidationPlan};
use adaptsurv::sim_engine::AllocationKind;
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn main() -> adaptsurv::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let design = DesignConfig::new(
        100,
        EntryProcess::Poisson { rate: 50.0 },
        AllocationKind::rpw(1, 1, 0.5),
        HazardSpec::constant(1.0, 0.05, 8.0)?,
        ArmCovariates::symmetric(1.5),
        vec![0.0],
        2024,
    );
    let plan = ValidationPlan {
        replicates,
        ..ValidationPlan::default()
    };
    let set = run_replicates(&design, &plan)?;
    let report = brownian_diagnostics(&set, &plan.v_grid)?;
    println!("replicates {} (failed {})", set.replicates(), set.failures.len());
    println!(
        "{:>5} {:>8} {:>8} {:>8} {:>8} {:>7}",
        "v", "mean", "tol", "var", "tol", "KS"
    );
    for c in &report.checks {
        println!(
            "{:>5.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>7.4}",
            c.v, c.mean, c.mean_tolerance, c.variance, c.variance_tolerance, c.ks
        );
    }
    for inc in &report.increments {
        println!(
            "cov of increments {:?} and {:?}: {:.4} (tolerance {:.4})",
            inc.first, inc.second, inc.covariance, inc.tolerance
        );
    }
    Ok(())
}
