//! Simulate one trial under randomized play-the-winner allocation, audit
//! that every allocation used only earlier outcomes, and summarise it.
//!
//! cargo run --example simulate_rpw_trial

use adaptsurv::cli_io::{allocation_log_csv, trial_to_csv};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn main() -> adaptsurv::Result<()> {
    let design = DesignConfig::new(
        200,
        EntryProcess::Poisson { rate: 100.0 },
        AllocationKind::rpw(1, 1, 0.5),
        HazardSpec::constant(1.0, 0.05, 8.0)?,
        ArmCovariates::symmetric(1.5),
        vec![std::f64::consts::LN_2],
        7,
    );
    let outcome = simulate_trial(&design)?;
    outcome.audit_condition_a()?;

    let trial = &outcome.trial;
    println!("subjects: {}", trial.len());
    println!("events:   {}", trial.event_count());
    println!("arm 1 share: {:.3}", outcome.arm_fraction(1));
    let last = outcome.allocation_log.last().expect("nonempty trial");
    println!("final urn: {:?}", last.urn);

    let csv = trial_to_csv(trial)?;
    println!("\ntrial CSV (first rows):");
    csv.lines().take(6).for_each(|l| println!("  {l}"));
    let log = allocation_log_csv(&outcome.allocation_log)?;
    println!("\nallocation log (first rows):");
    log.lines().take(6).for_each(|l| println!("  {l}"));
    Ok(())
}
