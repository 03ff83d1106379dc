//! Maximum partial likelihood estimation of β from `U(β; t, ϑ) = 0`, with
//! observed-information covariance, sandwich diagnostics and Wald
//! intervals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cox_engine::{score, ScoreEvaluation, ScoreVariant};
use crate::error::{Error, Result};
use crate::info_time::{information_path, sigma_hat, SigmaHat};
use crate::trial_core::TrialData;

/// Two-sided 95% normal quantile.
const Z_975: f64 = 1.959_963_984_540_054;
/// `|β|` beyond which the iteration is treated as diverging.
const DIVERGENCE_BOUND: f64 = 50.0;
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpleOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub variant: ScoreVariant,
    /// Floor on the smallest eigenvalue of information/n at the solution.
    pub min_information: f64,
}

impl Default for MpleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            variant: ScoreVariant::SubsampleRiskset,
            min_information: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpleResult {
    pub t: f64,
    pub theta: f64,
    pub beta_hat: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_score_norm: f64,
    pub loglik: f64,
    pub n_events: usize,
    /// Subjects entered by ϑ; the `n` in `√n(β̂ − β₀)`.
    pub n_entered: usize,
    pub information_at_hat: Vec<Vec<f64>>,
    pub vhat_at_hat: Vec<Vec<f64>>,
    /// Estimated covariance of `√n(β̂ − β₀)`: `n I⁻¹(β̂)`.
    pub covariance: Vec<Vec<f64>>,
    /// `n I⁻¹ V̂ I⁻¹`, reported for diagnostics.
    pub sandwich: Vec<Vec<f64>>,
    pub ci_95: Vec<[f64; 2]>,
}

impl MpleResult {
    /// Standard error of `β̂_p` (not scaled by `√n`).
    pub fn standard_error(&self, p: usize) -> f64 {
        (self.covariance[p][p] / self.n_entered as f64).sqrt()
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn sup_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn check_nonsingular(information: &DMatrix<f64>) -> Result<()> {
    let (min, max) = eigen_range(information);
    if !(max > 0.0) || !(min > 1e-12 * max) {
        return Err(Error::SingularInformation { min_eigenvalue: min });
    }
    Ok(())
}

/// Coordinates along which the log partial likelihood is monotone: every
/// included event carries the largest (or every one the smallest) value of
/// that covariate in its risk set, strictly for at least one event. The
/// maximiser is then at infinity.
fn monotone_coordinates(data: &TrialData, t: f64, theta: f64, variant: ScoreVariant) -> Vec<usize> {
    let d = data.dim();
    let cap = variant.entry_cap(theta);
    let subjects = data.subjects();
    let mut all_max = vec![true; d];
    let mut all_min = vec![true; d];
    let mut strict_max = vec![false; d];
    let mut strict_min = vec![false; d];
    for s in subjects {
        if s.entry_time > theta {
            break;
        }
        if !s.event || !(s.completion_time() <= t) {
            continue;
        }
        let w = s.observed_time;
        let zi = s.z(w);
        for r in subjects {
            if !(r.entry_time <= cap && r.entry_time + w <= t) {
                break;
            }
            if r.observed_time < w {
                continue;
            }
            let zj = r.z(w);
            for p in 0..d {
                if zj[p] > zi[p] {
                    all_max[p] = false;
                }
                if zj[p] < zi[p] {
                    all_min[p] = false;
                    strict_max[p] = true;
                }
                if zj[p] > zi[p] {
                    strict_min[p] = true;
                }
            }
        }
    }
    (0..d)
        .filter(|&p| (all_max[p] && strict_max[p]) || (all_min[p] && strict_min[p]))
        .collect()
}

/// Solve `U(β; t, ϑ) = 0` by Newton's method with step-halving on the log
/// partial likelihood.
pub fn solve_mple(data: &TrialData, t: f64, theta: f64, init_beta: &[f64], opts: &MpleOptions) -> Result<MpleResult> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument(
            "tol must be positive and max_iter at least 1".into(),
        ));
    }
    let variant = opts.variant;
    let mut current = score(data, init_beta, t, theta, variant)?;
    if current.n_events_used == 0 {
        return Err(Error::NoEvents);
    }
    if !monotone_coordinates(data, t, theta, variant).is_empty() {
        return Err(Error::NotConverged {
            iterations: 0,
            score_norm: sup_norm(&current.score),
            boundary: true,
        });
    }

    let mut iterations = 0;
    while sup_norm(&current.score) >= opts.tol {
        if iterations == opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                score_norm: sup_norm(&current.score),
                boundary: false,
            });
        }
        check_nonsingular(&current.information)?;
        let step = current
            .information
            .clone()
            .cholesky()
            .map(|c| c.solve(&current.score))
            .or_else(|| current.information.clone().lu().solve(&current.score))
            .ok_or(Error::SingularInformation { min_eigenvalue: 0.0 })?;
        iterations += 1;
        current = line_search(data, t, theta, variant, &current, &step)?;
        if sup_norm(&current.beta) > DIVERGENCE_BOUND {
            return Err(Error::NotConverged {
                iterations,
                score_norm: sup_norm(&current.score),
                boundary: true,
            });
        }
    }
    check_nonsingular(&current.information)?;
    finalize(data, current, iterations, opts)
}

fn line_search(
    data: &TrialData,
    t: f64,
    theta: f64,
    variant: ScoreVariant,
    current: &ScoreEvaluation,
    step: &DVector<f64>,
) -> Result<ScoreEvaluation> {
    let old_norm = sup_norm(&current.score);
    let slack = 1e-12 * (1.0 + current.loglik.abs());
    let mut scale = 1.0;
    for _ in 0..=MAX_HALVINGS {
        let beta = &current.beta + step * scale;
        let candidate = score(data, beta.as_slice(), t, theta, variant)?;
        if candidate.loglik.is_finite()
            && (candidate.loglik > current.loglik
                || (candidate.loglik >= current.loglik - slack && sup_norm(&candidate.score) < old_norm))
        {
            return Ok(candidate);
        }
        scale *= 0.5;
    }
    Err(Error::NotConverged {
        iterations: 0,
        score_norm: old_norm,
        boundary: false,
    })
}

fn finalize(data: &TrialData, at: ScoreEvaluation, iterations: usize, opts: &MpleOptions) -> Result<MpleResult> {
    let n = data.entry_count(at.theta);
    let info = &at.information;
    let (min_eig, _) = eigen_range(info);
    let scaled = min_eig / n as f64;
    if scaled < opts.min_information {
        return Err(Error::MinimumInformation {
            value: scaled,
            floor: opts.min_information,
        });
    }
    let inv = info.clone().try_inverse().ok_or(Error::SingularInformation {
        min_eigenvalue: min_eig,
    })?;
    let inv = (&inv + inv.transpose()) * 0.5;
    let covariance = &inv * n as f64;
    let sandwich = &inv * &at.vhat * &inv * n as f64;
    let ci_95 = (0..at.beta.len())
        .map(|p| {
            let half = Z_975 * inv[(p, p)].sqrt();
            [at.beta[p] - half, at.beta[p] + half]
        })
        .collect();
    Ok(MpleResult {
        t: at.t,
        theta: at.theta,
        beta_hat: at.beta.iter().copied().collect(),
        iterations,
        converged: true,
        final_score_norm: sup_norm(&at.score),
        loglik: at.loglik,
        n_events: at.n_events_used,
        n_entered: n,
        information_at_hat: rows(info),
        vhat_at_hat: rows(&at.vhat),
        covariance: rows(&covariance),
        sandwich: rows(&sandwich),
        ci_95,
    })
}

/// `β̂(v)`: the root of `U(β; σ̂_{n,v})` with σ̂ computed once at
/// `reference_beta` and then held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub v: f64,
    pub reference_beta: f64,
    pub sigma_hat: f64,
    pub attained: f64,
    pub result: MpleResult,
}

pub fn solve_mple_at_fraction(
    data: &TrialData,
    v: f64,
    planned: f64,
    reference_beta: f64,
    init_beta: f64,
    opts: &MpleOptions,
) -> Result<FractionEstimate> {
    if data.event_count() == 0 {
        return Err(Error::NoEvents);
    }
    let path = information_path(data, reference_beta, planned)?;
    let SigmaHat { time, attained, .. } = sigma_hat(&path, v)?;
    let result = solve_mple(data, time, time, &[init_beta], opts)?;
    Ok(FractionEstimate {
        v,
        reference_beta,
        sigma_hat: time,
        attained,
        result,
    })
}
