//! Information time: V̂/V_n at every event time, the first-passage times
//! σ̂_{n,v}, and the rescaled score B̂_n(v) = U(β; σ̂_{n,v}) / √V_n.
//!
//! cargo run --example information_time

use adaptsurv::info_time::{information_dips, information_path, rescale, sigma_hat};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn main() -> adaptsurv::Result<()> {
    let design = DesignConfig::new(
        200,
        EntryProcess::Poisson { rate: 100.0 },
        AllocationKind::rpw(1, 1, 0.5),
        HazardSpec::constant(1.0, 0.05, 8.0)?,
        ArmCovariates::symmetric(1.5),
        vec![0.0],
        3,
    );
    let trial = simulate_trial(&design)?.trial;
    let planned = design.planned_information;
    let path = information_path(&trial, 0.0, planned)?;
    println!(
        "event times: {}, largest fraction reached: {:.3}",
        path.len(),
        path.max_fraction()
    );

    for v in [0.25, 0.5, 0.75, 1.0] {
        match sigma_hat(&path, v) {
            Ok(s) => println!(
                "v = {v:.2}: sigma_hat = {:.4} (event {}), attained {:.4}, later dips {}",
                s.time,
                s.index,
                s.attained,
                information_dips(&path, v).len()
            ),
            Err(e) => println!("v = {v:.2}: {e}"),
        }
    }

    let grid: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let rescaled = rescale(&path, &grid)?;
    println!("\n{:>6} {:>10} {:>10}", "v", "sigma_hat", "B_hat");
    for (k, v) in grid.iter().enumerate() {
        match (rescaled.sigma_hat[k], rescaled.bhat[k]) {
            (Some(s), Some(b)) => println!("{v:>6.2} {s:>10.4} {b:>10.4}"),
            _ => println!("{v:>6.2} {:>10} {:>10}", "-", "-"),
        }
    }
    Ok(())
}
