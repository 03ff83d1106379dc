//! The compensated score field Ũ(β₀; t, ϑ)/√n: replicate means against
//! zero, and the covariance of two grid points against the variance at
//! their coordinatewise minimum. A policy that peeks at future outcomes is
//! run alongside as a negative control; its means drift away from zero.
//!
//! cargo run --release --example field_covariance [replicates]

use adaptsurv::mc_validate::{field_diagnostics, martingale_means, run_replicates, ValidationPlan};
use adaptsurv::sim_engine::AllocationKind;
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn design(allocation: AllocationKind) -> adaptsurv::Result<DesignConfig> {
    Ok(DesignConfig::new(
        100,
        EntryProcess::Poisson { rate: 50.0 },
        allocation,
        HazardSpec::constant(1.0, 0.05, 8.0)?,
        ArmCovariates::symmetric(1.5),
        vec![0.0],
        99,
    ))
}

fn main() -> adaptsurv::Result<()> {
    let replicates = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let plan = ValidationPlan {
        replicates,
        v_grid: Vec::new(),
        t_grid: vec![1.5, 2.5, 4.0],
        theta_grid: vec![0.5, 1.0, 1.5],
        ..ValidationPlan::default()
    };
    let rpw = run_replicates(&design(AllocationKind::rpw(1, 1, 0.5))?, &plan)?;
    let field = field_diagnostics(&rpw)?;
    println!("play-the-winner, {} replicates", rpw.replicates());
    println!(
        "  min-match discrepancy: worst |D|/SE = {:.2} (tolerance {})",
        field.max_ratio, field.ratio_tolerance
    );
    for m in martingale_means(&rpw)? {
        println!("  mean at (t = {}, theta = {}): z = {:+.2}", m.t, m.theta, m.z);
    }

    let peek = run_replicates(&design(AllocationKind::FuturePeek { window: 1.0 })?, &plan)?;
    println!("\nfuture-peeking allocation:");
    for m in martingale_means(&peek)? {
        println!("  mean at (t = {}, theta = {}): z = {:+.2}", m.t, m.theta, m.z);
    }
    Ok(())
}
