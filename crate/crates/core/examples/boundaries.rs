//! Lan–DeMets alpha-spending boundaries for the three spending families,
//! one- and two-sided, at five equally spaced looks.
//!
//! cargo run --example boundaries

use adaptsurv::seq_monitor::{MonitoringPlan, Sidedness, Spending};

fn main() -> adaptsurv::Result<()> {
    for sidedness in [Sidedness::Two, Sidedness::One] {
        for spending in [Spending::ObrienFlemingType, Spending::PocockType, Spending::Linear] {
            let plan = MonitoringPlan::equally_spaced(5, 0.05, spending, sidedness)?;
            println!("{} ({}-sided)", spending.name(), sidedness.name());
            for ((v, a), c) in plan.v_grid.iter().zip(plan.alpha_spent()).zip(&plan.boundaries) {
                println!("  v = {v:.2}  spent = {a:.5}  c = {c:.4}");
            }
        }
    }
    let single = MonitoringPlan::equally_spaced(1, 0.05, Spending::ObrienFlemingType, Sidedness::Two)?;
    println!("\nsingle look: {:.5}", single.boundaries[0]);
    Ok(())
}
