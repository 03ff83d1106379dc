//! Group-sequential monitoring in information time: look k happens at the
//! first event where V̂/V_n reaches v_k, and the boundary is recomputed at
//! the fraction actually attained.
//!
//! cargo run --example sequential_monitoring

use adaptsurv::seq_monitor::{monitor_trial, MonitoringPlan, Sidedness, Spending};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn main() -> adaptsurv::Result<()> {
    let plan = MonitoringPlan::equally_spaced(3, 0.05, Spending::ObrienFlemingType, Sidedness::Two)?;
    println!("planned boundaries: {:?}\n", plan.boundaries);

    for (label, beta) in [("null", 0.0), ("beta = 0.3", 0.3)] {
        let design = DesignConfig::new(
            200,
            EntryProcess::Poisson { rate: 100.0 },
            AllocationKind::rpw(1, 1, 0.5),
            HazardSpec::constant(1.0, 0.05, 8.0)?,
            ArmCovariates::symmetric(1.5),
            vec![beta],
            42,
        );
        let trial = simulate_trial(&design)?.trial;
        let outcome = monitor_trial(&trial, &plan, 0.0, design.planned_information)?;
        println!("{label}:");
        for d in &outcome.decisions {
            let show = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.4}"));
            println!(
                "  look {}: v = {}, t = {}, z = {}, boundary = {}, {}",
                d.look_index,
                show(d.v),
                show(d.sigma_hat),
                show(d.z_statistic),
                show(d.boundary),
                d.action.name()
            );
        }
        println!("  data examined through t = {:?}\n", outcome.evaluated_through);
    }
    Ok(())
}
