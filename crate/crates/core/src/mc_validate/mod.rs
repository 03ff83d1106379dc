//! Monte Carlo harness: replicate trials from split seed streams, record
//! per-replicate statistics at the true β, and summarise them against the
//! Brownian and Gaussian-field limits, the martingale property of the
//! compensated score, and brute-force oracles.

mod compensator;
mod diagnostics;
mod oracle;

pub use compensator::{compensated_grid, compensated_score, compensator_terms};
pub use diagnostics::{
    brownian_diagnostics, coverage, field_diagnostics, fraction_variances, jackknife_discrepancy, martingale_means,
    type1_and_coverage, type1_rate, BrownianReport, CoverageReport, DiagnosticsReport, FieldPair, FieldReport,
    FractionVariance, IncrementCheck, MeanCheck, RejectionReport, VCheck, MIN_REPLICATES,
};
pub use oracle::oracle_score;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cox_engine::{score, ScoreVariant};
use crate::error::{Error, Result};
use crate::estimator::{solve_mple, solve_mple_at_fraction, MpleOptions};
use crate::info_time::{bhat_path, check_grid};
use crate::rng::replicate_seed;
use crate::seq_monitor::{monitor_trial, MonitoringOutcome, MonitoringPlan};
use crate::sim_engine::simulate_trial;
use crate::trial_core::{DesignConfig, TrialData};

/// Largest tolerated fraction of failed replicates.
pub const MAX_FAILURE_FRACTION: f64 = 0.02;

/// What to compute on each replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationPlan {
    pub replicates: usize,
    /// Information fractions for `B̂_n(v)` (empty to skip).
    pub v_grid: Vec<f64>,
    /// Calendar times and entry cutoffs for the compensated score field;
    /// every ϑ must be at most the smallest t.
    pub t_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    /// Compare the engine against the brute-force oracle on each replicate.
    pub oracle_checks: bool,
    /// Solve for β̂ at the horizon.
    pub estimate_final: bool,
    /// Fractions at which to compute `β̂(v)` (empty to skip).
    pub fraction_grid: Vec<f64>,
    /// β at which σ̂ is computed for `β̂(v)`.
    pub reference_beta: f64,
    pub monitoring: Option<MonitoringPlan>,
    pub null_beta: f64,
    pub mple: MpleOptions,
}

impl Default for ValidationPlan {
    fn default() -> Self {
        Self {
            replicates: 2000,
            v_grid: vec![0.25, 0.5, 0.75, 1.0],
            t_grid: Vec::new(),
            theta_grid: Vec::new(),
            oracle_checks: false,
            estimate_final: false,
            fraction_grid: Vec::new(),
            reference_beta: 0.0,
            monitoring: None,
            null_beta: 0.0,
            mple: MpleOptions::default(),
        }
    }
}

impl ValidationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InsufficientReplicates {
                available: self.replicates,
                required: 2,
            });
        }
        if !self.v_grid.is_empty() {
            check_grid(&self.v_grid).map_err(|_| Error::validation("v_grid", "must be positive and increasing"))?;
        }
        if !self.fraction_grid.is_empty() {
            check_grid(&self.fraction_grid)
                .map_err(|_| Error::validation("fraction_grid", "must be positive and increasing"))?;
        }
        if self.t_grid.is_empty() != self.theta_grid.is_empty() {
            return Err(Error::validation("t_grid", "t_grid and theta_grid must both be given"));
        }
        for (key, grid) in [("t_grid", &self.t_grid), ("theta_grid", &self.theta_grid)] {
            if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::validation(key, "must be positive and strictly increasing"));
            }
        }
        if let (Some(&tmin), Some(&thmax)) = (self.t_grid.first(), self.theta_grid.last()) {
            if thmax > tmin {
                return Err(Error::validation(
                    "theta_grid",
                    "every theta must be at most the smallest t",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub beta_hat: Option<f64>,
    pub ci_95: Option<[f64; 2]>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionRecord {
    pub v: f64,
    pub sigma_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    /// Error code; `E_INFORMATION_NOT_REACHED` is not counted as a failure.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub events: usize,
    pub sigma_hat: Vec<Option<f64>>,
    pub bhat: Vec<Option<f64>>,
    /// `Ũ(β₀; t, ϑ)/√n`, row-major in t then ϑ.
    pub field: Vec<f64>,
    pub oracle_error: Option<f64>,
    pub final_estimate: Option<EstimateRecord>,
    pub fractions: Vec<FractionRecord>,
    pub monitoring: Option<MonitoringOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub index: usize,
    pub seed: u64,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSet {
    pub config: DesignConfig,
    pub plan: ValidationPlan,
    pub records: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
}

impl ReplicateSet {
    pub fn replicates(&self) -> usize {
        self.records.len() + self.failures.len()
    }

    pub fn true_beta(&self) -> f64 {
        self.config.beta0[0]
    }
}

/// Run `plan.replicates` independent trials. Replicate `r` is simulated
/// from `replicate_seed(config.seed, r)`, so results do not depend on
/// scheduling. A replicate whose pipeline fails is recorded as a failure;
/// more than 2% failures is an error.
pub fn run_replicates(config: &DesignConfig, plan: &ValidationPlan) -> Result<ReplicateSet> {
    plan.validate()?;
    config.validate()?;
    if config.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: config.dim(),
        });
    }
    let outcomes: Vec<(usize, u64, Result<ReplicateRecord>)> = (0..plan.replicates)
        .into_par_iter()
        .map(|r| {
            let seed = replicate_seed(config.seed, r as u64);
            (r, seed, run_one(config, plan, r, seed))
        })
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (index, seed, outcome) in outcomes {
        match outcome {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(ReplicateFailure {
                index,
                seed,
                code: e.code().to_string(),
                message: e.to_string(),
            }),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * plan.replicates as f64 {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: plan.replicates,
        });
    }
    Ok(ReplicateSet {
        config: config.clone(),
        plan: plan.clone(),
        records,
        failures,
    })
}

fn oracle_gap(trial: &TrialData, beta: &[f64], points: &[(f64, f64)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(t, theta) in points {
        for variant in [ScoreVariant::FullRiskset, ScoreVariant::SubsampleRiskset] {
            let engine = score(trial, beta, t, theta, variant)?;
            let oracle = oracle_score(trial, beta, t, theta, variant)?;
            for (a, b) in engine.score.iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn run_one(config: &DesignConfig, plan: &ValidationPlan, index: usize, seed: u64) -> Result<ReplicateRecord> {
    let mut cfg = config.clone();
    cfg.seed = seed;
    let trial = simulate_trial(&cfg)?.trial;
    let beta0 = cfg.beta0.clone();
    let n = trial.len();
    let horizon = trial.horizon();

    let (sigma_hat, bhat) = if plan.v_grid.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let path = bhat_path(&trial, beta0[0], &plan.v_grid, cfg.planned_information)?;
        (path.sigma_hat, path.bhat)
    };

    let field = if plan.t_grid.is_empty() {
        Vec::new()
    } else {
        let root = (n as f64).sqrt();
        compensated_grid(&trial, &beta0, &plan.t_grid, &plan.theta_grid, &cfg.hazard)?
            .into_iter()
            .map(|u| u[0] / root)
            .collect()
    };

    let oracle_error = if plan.oracle_checks {
        let mut points: Vec<(f64, f64)> = plan
            .t_grid
            .iter()
            .flat_map(|&t| plan.theta_grid.iter().map(move |&th| (t, th)))
            .collect();
        points.push((horizon, horizon));
        points.push((horizon, 0.5 * horizon));
        Some(oracle_gap(&trial, &beta0, &points)?)
    } else {
        None
    };

    let final_estimate =
        plan.estimate_final.then(
            || match solve_mple(&trial, horizon, horizon, &[plan.null_beta], &plan.mple) {
                Ok(r) => EstimateRecord {
                    beta_hat: Some(r.beta_hat[0]),
                    ci_95: Some(r.ci_95[0]),
                    error: None,
                },
                Err(e) => EstimateRecord {
                    beta_hat: None,
                    ci_95: None,
                    error: Some(e.code().to_string()),
                },
            },
        );

    let fractions = plan
        .fraction_grid
        .iter()
        .map(|&v| {
            match solve_mple_at_fraction(
                &trial,
                v,
                cfg.planned_information,
                plan.reference_beta,
                plan.null_beta,
                &plan.mple,
            ) {
                Ok(est) => FractionRecord {
                    v,
                    sigma_hat: Some(est.sigma_hat),
                    beta_hat: Some(est.result.beta_hat[0]),
                    error: None,
                },
                Err(e) => FractionRecord {
                    v,
                    sigma_hat: None,
                    beta_hat: None,
                    error: Some(e.code().to_string()),
                },
            }
        })
        .collect();

    let monitoring = match &plan.monitoring {
        Some(mp) => Some(monitor_trial(&trial, mp, plan.null_beta, cfg.planned_information)?),
        None => None,
    };

    Ok(ReplicateRecord {
        index,
        seed,
        n,
        events: trial.event_count(),
        sigma_hat,
        bhat,
        field,
        oracle_error,
        final_estimate,
        fractions,
        monitoring,
    })
}

/// Long-form CSV: one row per replicate × quantity × grid point.
pub fn replicate_csv(set: &ReplicateSet) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["replicate", "seed", "quantity", "t", "theta", "v", "value"])
        .map_err(io)?;
    let num = |x: f64| format!("{x:?}");
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for rec in &set.records {
        let (r, s) = (rec.index.to_string(), rec.seed.to_string());
        let mut row = |q: &str, t: String, th: String, v: String, val: String| {
            w.write_record([r.as_str(), s.as_str(), q, &t, &th, &v, &val])
                .map_err(io)
        };
        for (k, &v) in set.plan.v_grid.iter().enumerate() {
            row("bhat", String::new(), String::new(), num(v), opt(rec.bhat[k]))?;
            row("sigma_hat", String::new(), String::new(), num(v), opt(rec.sigma_hat[k]))?;
        }
        let nth = set.plan.theta_grid.len();
        for (k, value) in rec.field.iter().enumerate() {
            let (t, th) = (set.plan.t_grid[k / nth], set.plan.theta_grid[k % nth]);
            row("compensated_score", num(t), num(th), String::new(), num(*value))?;
        }
        if let Some(e) = rec.oracle_error {
            row("oracle_error", String::new(), String::new(), String::new(), num(e))?;
        }
        if let Some(est) = &rec.final_estimate {
            row(
                "beta_hat_final",
                String::new(),
                String::new(),
                String::new(),
                opt(est.beta_hat),
            )?;
        }
        for f in &rec.fractions {
            row(
                "beta_hat_fraction",
                String::new(),
                String::new(),
                num(f.v),
                opt(f.beta_hat),
            )?;
        }
        if let Some(m) = &rec.monitoring {
            let stop = m.stopping_look().map(|k| k.to_string()).unwrap_or_default();
            row("stopping_look", String::new(), String::new(), String::new(), stop)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
