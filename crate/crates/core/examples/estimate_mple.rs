//! Maximum partial likelihood estimation at the end of a trial and at
//! interim information fractions, with model-based and sandwich variances.
//!
//! cargo run --example estimate_mple

use adaptsurv::estimator::{solve_mple, solve_mple_at_fraction, MpleOptions};
use adaptsurv::sim_engine::{simulate_trial, AllocationKind};
use adaptsurv::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec};

fn main() -> adaptsurv::Result<()> {
    let beta0 = std::f64::consts::LN_2;
    let design = DesignConfig::new(
        400,
        EntryProcess::Poisson { rate: 100.0 },
        AllocationKind::rpw(1, 1, 0.5),
        HazardSpec::constant(1.0, 0.05, 10.0)?,
        ArmCovariates::symmetric(1.5),
        vec![beta0],
        5,
    );
    let trial = simulate_trial(&design)?.trial;
    let opts = MpleOptions::default();
    let horizon = design.horizon();

    let fit = solve_mple(&trial, horizon, horizon, &[0.0], &opts)?;
    println!("true beta        {beta0:.4}");
    println!(
        "beta_hat         {:.4}  ({} Newton steps)",
        fit.beta_hat[0], fit.iterations
    );
    println!("model SE         {:.4}", fit.standard_error(0));
    println!(
        "sandwich SE      {:.4}",
        (fit.sandwich[0][0] / fit.n_entered as f64).sqrt()
    );
    println!("95% interval     [{:.4}, {:.4}]", fit.ci_95[0][0], fit.ci_95[0][1]);

    println!("\ninterim estimates at information fractions (sigma_hat under beta0):");
    for v in [0.25, 0.5, 0.75, 1.0] {
        match solve_mple_at_fraction(&trial, v, design.planned_information, beta0, 0.0, &opts) {
            Ok(e) => println!(
                "  v = {v:.2}: t = {:.3}, beta_hat = {:.4}, CI [{:.4}, {:.4}]",
                e.sigma_hat, e.result.beta_hat[0], e.result.ci_95[0][0], e.result.ci_95[0][1]
            ),
            Err(err) => println!("  v = {v:.2}: {err}"),
        }
    }
    Ok(())
}
