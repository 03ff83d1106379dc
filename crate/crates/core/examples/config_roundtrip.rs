//! Parse a run configuration, simulate from it, and round-trip the trial
//! through its CSV encoding without losing a bit of the observed data. Then run the same
//! pipeline through the command-line dispatcher into a scratch directory.
//!
//! cargo run --example config_roundtrip

use adaptsurv::cli_io::{dispatch, parse_config, trial_from_csv, trial_to_csv, RunManifest};
use adaptsurv::sim_engine::simulate_trial;

const CONFIG: &str = include_str!("../configs/rpw_null.toml");

fn main() -> adaptsurv::Result<()> {
    let cfg = parse_config(CONFIG)?;
    println!(
        "n = {}, V_n = {}, looks at {:?}, spending {}",
        cfg.design.target_enrollment,
        cfg.design.planned_information,
        cfg.monitoring.v_grid,
        cfg.monitoring.spending.name()
    );

    let trial = simulate_trial(&cfg.design)?.trial;
    let text = trial_to_csv(&trial)?;
    let back = trial_from_csv(&text)?;
    assert_eq!(back.subjects(), trial.without_latent().subjects());
    println!("CSV round trip of {} subjects is exact", back.len());

    let dir = std::env::temp_dir().join(format!("adaptsurv-example-{}", std::process::id()));
    let config_path = dir.join("config.toml");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(&config_path, CONFIG)?;
    let out = dir.join("sim");
    let code = dispatch([
        "adaptsurv",
        "simulate",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let manifest = RunManifest::read(&out)?;
    println!("simulate exited with {code}; manifest status {}", manifest.status);
    for f in &manifest.outputs {
        println!("  {} ({} bytes, sha256 {}…)", f.name, f.bytes, &f.sha256[..12]);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
