//! Configuration files, CSV/JSON formats, run manifests and the
//! `adaptsurv` command line.
//!
//! Every subcommand writes into `--out DIR`: its result files plus a
//! `manifest.json`. Exit codes are 0 on success, 1 on a domain error
//! (printed as `error[E_CODE]: message`) and 2 on a usage error. The
//! environment variable `ADAPTSURV_SEED` overrides the configured seed.

mod config;
mod formats;
mod manifest;

pub use config::{parse_config, parse_plan, MonitoringSettings, RunConfig, ValidationSettings};
pub use formats::{allocation_log_csv, boundaries_csv, rescaled_path_csv, trial_from_csv, trial_to_csv};
pub use manifest::{sha256_hex, write_atomic, FileEntry, RunManifest, MANIFEST_FILE};

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cox_engine::{score, ScoreVariant};
use crate::error::{Error, Result};
use crate::estimator::{solve_mple, MpleOptions};
use crate::info_time::bhat_path;
use crate::mc_validate::{replicate_csv, run_replicates, DiagnosticsReport};
use crate::seq_monitor::{monitor_trial, MonitoringPlan, Sidedness, Spending};
use crate::sim_engine::simulate_trial;
use crate::trial_core::TrialData;

pub const SEED_ENV: &str = "ADAPTSURV_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "adaptsurv",
    version,
    about = "Survival trials with outcome-adaptive enrollment"
)]
struct Cli {
    /// Worker threads for replicate runs (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Subsample,
}

impl From<VariantArg> for ScoreVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Full => ScoreVariant::FullRiskset,
            VariantArg::Subsample => ScoreVariant::SubsampleRiskset,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trial: trial.csv, allocation_log.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score, information and V̂ at (β, t, ϑ): score.json, plus
    /// rescaled_path.csv for one covariate.
    Score {
        #[arg(long)]
        trial: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated β (default: zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        /// Calendar time (default: the trial horizon).
        #[arg(long)]
        t: Option<f64>,
        /// Entry cutoff (default: t).
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, value_enum, default_value = "subsample")]
        variant: VariantArg,
        /// Information fractions for the rescaled path.
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75,1")]
        v_grid: Vec<f64>,
        /// Planned information V_n (default: number of subjects).
        #[arg(long)]
        planned: Option<f64>,
    },
    /// Maximum partial likelihood estimate: mple.json.
    Estimate {
        #[arg(long)]
        trial: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        /// Comma-separated starting β (default: zero).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        init: Vec<f64>,
        #[arg(long, value_enum, default_value = "subsample")]
        variant: VariantArg,
    },
    /// Sequential monitoring of a trial against a plan: monitoring.json.
    Monitor {
        #[arg(long)]
        trial: PathBuf,
        /// TOML document with a [monitoring] section.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Planned information V_n (default: number of subjects).
        #[arg(long)]
        planned: Option<f64>,
    },
    /// Alpha-spending boundaries at equally spaced looks: boundaries.csv.
    Boundaries {
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        looks: usize,
        #[arg(long, default_value = "obrien_fleming_type")]
        spending: String,
        #[arg(long, default_value = "two")]
        sided: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo diagnostics: diagnostics.json, replicates.csv.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Score { .. } => "score",
            Command::Estimate { .. } => "estimate",
            Command::Monitor { .. } => "monitor",
            Command::Boundaries { .. } => "boundaries",
            Command::Validate { .. } => "validate",
        }
    }

    fn out(&self) -> &Path {
        match self {
            Command::Simulate { out, .. }
            | Command::Score { out, .. }
            | Command::Estimate { out, .. }
            | Command::Monitor { out, .. }
            | Command::Boundaries { out, .. }
            | Command::Validate { out, .. } => out,
        }
    }
}

/// Files produced by a subcommand, in the order they are written.
struct Outputs {
    seed: Option<u64>,
    hash: String,
    files: Vec<(&'static str, Vec<u8>)>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn hash_inputs(parts: &[&str]) -> String {
    sha256_hex(parts.join("\u{1f}").as_bytes())
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn load_trial(path: &Path) -> Result<(String, TrialData)> {
    let text = read(path)?;
    let data = trial_from_csv(&text)?;
    Ok((text, data))
}

fn beta_or_zero(beta: &[f64], data: &TrialData) -> Vec<f64> {
    if beta.is_empty() {
        vec![0.0; data.dim()]
    } else {
        beta.to_vec()
    }
}

#[derive(Serialize)]
struct ScoreRecord {
    beta: Vec<f64>,
    t: f64,
    theta: f64,
    variant: ScoreVariant,
    score: Vec<f64>,
    loglik: f64,
    information: Vec<Vec<f64>>,
    vhat: Vec<Vec<f64>>,
    n_events_used: usize,
    tied_events: usize,
}

fn run_command(command: &Command, seed_override: Option<u64>) -> Result<Outputs> {
    match command {
        Command::Simulate { config, .. } => {
            let text = read(config)?;
            let mut design = parse_config(&text)?.design;
            if let Some(seed) = seed_override {
                design.seed = seed;
            }
            let outcome = simulate_trial(&design)?;
            Ok(Outputs {
                seed: Some(design.seed),
                hash: hash_inputs(&[&text]),
                files: vec![
                    ("trial.csv", trial_to_csv(&outcome.trial)?.into_bytes()),
                    (
                        "allocation_log.csv",
                        allocation_log_csv(&outcome.allocation_log)?.into_bytes(),
                    ),
                ],
            })
        }
        Command::Score {
            trial,
            beta,
            t,
            theta,
            variant,
            v_grid,
            planned,
            ..
        } => {
            let (text, data) = load_trial(trial)?;
            let beta = beta_or_zero(beta, &data);
            let t = t.unwrap_or(data.horizon());
            let theta = theta.unwrap_or(t);
            let variant = ScoreVariant::from(*variant);
            let eval = score(&data, &beta, t, theta, variant)?;
            let record = ScoreRecord {
                beta: beta.clone(),
                t,
                theta,
                variant,
                score: eval.score.iter().copied().collect(),
                loglik: eval.loglik,
                information: rows(&eval.information),
                vhat: rows(&eval.vhat),
                n_events_used: eval.n_events_used,
                tied_events: eval.tied_events,
            };
            let mut files = vec![("score.json", json(&record)?)];
            if data.dim() == 1 {
                let planned = planned.unwrap_or(data.len() as f64);
                let path = bhat_path(&data, beta[0], v_grid, planned)?;
                files.push(("rescaled_path.csv", rescaled_path_csv(&path)?.into_bytes()));
            }
            let settings = format!("{beta:?} {t:?} {theta:?} {variant:?} {v_grid:?} {planned:?}");
            Ok(Outputs {
                seed: None,
                hash: hash_inputs(&[&text, &settings]),
                files,
            })
        }
        Command::Estimate {
            trial,
            t,
            theta,
            init,
            variant,
            ..
        } => {
            let (text, data) = load_trial(trial)?;
            let init = beta_or_zero(init, &data);
            let t = t.unwrap_or(data.horizon());
            let theta = theta.unwrap_or(t);
            let opts = MpleOptions {
                variant: ScoreVariant::from(*variant),
                ..MpleOptions::default()
            };
            let result = solve_mple(&data, t, theta, &init, &opts)?;
            let settings = format!("{init:?} {t:?} {theta:?} {:?}", opts.variant);
            Ok(Outputs {
                seed: None,
                hash: hash_inputs(&[&text, &settings]),
                files: vec![("mple.json", json(&result)?)],
            })
        }
        Command::Monitor {
            trial, plan, planned, ..
        } => {
            let (trial_text, data) = load_trial(trial)?;
            let plan_text = read(plan)?;
            let settings = parse_plan(&plan_text)?;
            let plan = settings.plan()?;
            let planned = planned.unwrap_or(data.len() as f64);
            let outcome = monitor_trial(&data, &plan, settings.null_beta, planned)?;
            Ok(Outputs {
                seed: None,
                hash: hash_inputs(&[&trial_text, &plan_text, &format!("{planned:?}")]),
                files: vec![("monitoring.json", json(&outcome)?)],
            })
        }
        Command::Boundaries {
            alpha,
            looks,
            spending,
            sided,
            ..
        } => {
            let spending_kind = Spending::parse(spending)
                .ok_or_else(|| Error::validation("spending", format!("unknown `{spending}`")))?;
            let sidedness =
                Sidedness::parse(sided).ok_or_else(|| Error::validation("sided", format!("unknown `{sided}`")))?;
            let plan = MonitoringPlan::equally_spaced(*looks, *alpha, spending_kind, sidedness)?;
            let table = boundaries_csv(&plan.v_grid, &plan.alpha_spent(), &plan.boundaries)?;
            Ok(Outputs {
                seed: None,
                hash: hash_inputs(&[&format!("{alpha:?} {looks} {spending} {sided}")]),
                files: vec![("boundaries.csv", table.into_bytes())],
            })
        }
        Command::Validate { config, replicates, .. } => {
            let text = read(config)?;
            let mut cfg = parse_config(&text)?;
            if let Some(seed) = seed_override {
                cfg.design.seed = seed;
            }
            if let Some(r) = replicates {
                cfg.validation.replicates = *r;
            }
            let plan = cfg.validation.plan(&cfg.monitoring)?;
            let set = run_replicates(&cfg.design, &plan)?;
            let report = DiagnosticsReport::from_set(&set)?;
            Ok(Outputs {
                seed: Some(cfg.design.seed),
                hash: hash_inputs(&[&text, &format!("{replicates:?}")]),
                files: vec![
                    ("diagnostics.json", json(&report)?),
                    ("replicates.csv", replicate_csv(&set)?.into_bytes()),
                ],
            })
        }
    }
}

fn seed_from_env(value: Option<String>) -> Result<Option<u64>> {
    value
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::validation(SEED_ENV, format!("`{s}` is not a nonnegative integer")))
        })
        .transpose()
}

fn execute(cli: &Cli, seed_override: Option<u64>) -> Result<()> {
    let out = cli.command.out();
    fs::create_dir_all(out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let mut manifest = RunManifest::start(cli.command.name(), None, String::new());
    manifest.write(out)?;
    let run = || run_command(&cli.command, seed_override);
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(run),
        None => run(),
    };
    match result {
        Ok(outputs) => {
            manifest.seed = outputs.seed;
            manifest.config_hash = outputs.hash;
            for (name, contents) in &outputs.files {
                write_atomic(out, name, contents)?;
                manifest.record(name, contents);
            }
            manifest.finish(Ok(()));
            manifest.write(out)
        }
        Err(e) => {
            manifest.finish(Err(&e));
            manifest.write(out)?;
            Err(e)
        }
    }
}

/// Run the command line `args` (program name first) and return the exit
/// code. Diagnostics go to stderr.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = seed_from_env(std::env::var(SEED_ENV).ok()).and_then(|seed| execute(&cli, seed));
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(dispatch(["adaptsurv", "frobnicate"]), 2);
        assert_eq!(dispatch(["adaptsurv", "simulate"]), 2);
        assert_eq!(dispatch(["adaptsurv", "--help"]), 0);
    }

    #[test]
    fn seed_override_must_be_an_integer() {
        assert_eq!(seed_from_env(Some("17".into())).unwrap(), Some(17));
        assert_eq!(seed_from_env(None).unwrap(), None);
        assert!(matches!(seed_from_env(Some("x".into())), Err(Error::Validation { .. })));
    }
}
