//! Summaries of a [`ReplicateSet`] against the limiting Brownian motion,
//! the Gaussian field covariance `V(t₁∧t₂, ϑ₁∧ϑ₂)`, the martingale mean of
//! the compensated score, estimator variance and coverage, and sequential
//! type-I error. Tolerances are multiples of the standard errors of the
//! estimators at the replicate count used, and are stored in the report.

use serde::Serialize;

use super::{run_replicates, ReplicateSet, ValidationPlan, MAX_FAILURE_FRACTION};
use crate::error::{Error, Result};
use crate::seq_monitor::MonitoringPlan;
use crate::stats::{
    covariance, covariance_standard_error, ks_statistic_normal, mean, variance, variance_standard_error,
};
use crate::trial_core::DesignConfig;

/// Fewest replicates accepted by the distributional diagnostics.
pub const MIN_REPLICATES: usize = 500;

const INFORMATION_NOT_REACHED: &str = "E_INFORMATION_NOT_REACHED";

fn require_replicates(set: &ReplicateSet) -> Result<()> {
    if set.replicates() < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            available: set.replicates(),
            required: MIN_REPLICATES,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VCheck {
    pub v: f64,
    pub reached: usize,
    pub mean: f64,
    pub mean_tolerance: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub variance_tolerance: f64,
    /// KS distance of `B̂(v)/√v` from N(0, 1).
    pub ks: f64,
    pub mean_ok: bool,
    pub variance_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementCheck {
    /// Disjoint intervals `(a₁, b₁]` and `(a₂, b₂]` of information time.
    pub first: [f64; 2],
    pub second: [f64; 2],
    pub covariance: f64,
    pub se: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BrownianReport {
    pub replicates: usize,
    pub checks: Vec<VCheck>,
    /// Replicates that reached every grid point (used for increments).
    pub complete_paths: usize,
    pub increments: Vec<IncrementCheck>,
}

impl BrownianReport {
    pub fn check(&self, v: f64) -> Option<&VCheck> {
        self.checks.iter().find(|c| c.v == v)
    }
}

/// Mean, variance, increment covariances and KS distance of `B̂_n(v)` for
/// each `v` in `v_grid` (which must be part of the replicate grid).
pub fn brownian_diagnostics(set: &ReplicateSet, v_grid: &[f64]) -> Result<BrownianReport> {
    require_replicates(set)?;
    let idx: Vec<usize> = v_grid
        .iter()
        .map(|v| {
            set.plan
                .v_grid
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| Error::InvalidArgument(format!("v = {v} is not on the replicate grid")))
        })
        .collect::<Result<_>>()?;
    let checks = v_grid
        .iter()
        .zip(&idx)
        .map(|(&v, &k)| {
            let xs: Vec<f64> = set.records.iter().filter_map(|r| r.bhat[k]).collect();
            let r = xs.len();
            let (m, var, var_se) = if r >= 2 {
                (mean(&xs), variance(&xs), variance_standard_error(&xs))
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            let mean_tolerance = 3.0 * (v / r as f64).sqrt();
            let variance_tolerance = 4.0 * var_se;
            let scaled: Vec<f64> = xs.iter().map(|x| x / v.sqrt()).collect();
            VCheck {
                v,
                reached: r,
                mean: m,
                mean_tolerance,
                variance: var,
                variance_se: var_se,
                variance_tolerance,
                ks: if r > 0 { ks_statistic_normal(&scaled) } else { f64::NAN },
                mean_ok: m.abs() <= mean_tolerance,
                variance_ok: (var - v).abs() <= variance_tolerance,
            }
        })
        .collect();

    let complete: Vec<Vec<f64>> = set
        .records
        .iter()
        .filter_map(|r| idx.iter().map(|&k| r.bhat[k]).collect::<Option<Vec<f64>>>())
        .collect();
    let mut increments = Vec::new();
    if complete.len() >= 2 {
        let incr = |j: usize| -> Vec<f64> {
            complete
                .iter()
                .map(|p| if j == 0 { p[0] } else { p[j] - p[j - 1] })
                .collect()
        };
        let start = |j: usize| if j == 0 { 0.0 } else { v_grid[j - 1] };
        for j in 0..v_grid.len() {
            for k in j + 1..v_grid.len() {
                let (a, b) = (incr(j), incr(k));
                let c = covariance(&a, &b);
                let se = covariance_standard_error(&a, &b);
                increments.push(IncrementCheck {
                    first: [start(j), v_grid[j]],
                    second: [start(k), v_grid[k]],
                    covariance: c,
                    se,
                    tolerance: 3.0 * se,
                    ok: c.abs() <= 3.0 * se,
                });
            }
        }
    }
    Ok(BrownianReport {
        replicates: set.replicates(),
        checks,
        complete_paths: complete.len(),
        increments,
    })
}

/// `D = Ĉov(a, b) − V̂ar(m)` and its leave-one-out jackknife standard
/// error, computed in `O(R)` from centred sums.
pub fn jackknife_discrepancy(a: &[f64], b: &[f64], m: &[f64]) -> (f64, f64) {
    let r = a.len();
    let centre = |x: &[f64]| {
        let mu = mean(x);
        x.iter().map(|v| v - mu).collect::<Vec<f64>>()
    };
    let (a, b, m) = (centre(a), centre(b), centre(m));
    let sums = |x: &[f64], y: &[f64]| {
        (
            x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>(),
            x.iter().sum::<f64>(),
            y.iter().sum::<f64>(),
        )
    };
    let (sab, sa, sb) = sums(&a, &b);
    let (smm, sm, _) = sums(&m, &m);
    let nf = r as f64;
    let full = (sab - sa * sb / nf) / (nf - 1.0) - (smm - sm * sm / nf) / (nf - 1.0);
    let k = nf - 1.0;
    let loo: Vec<f64> = (0..r)
        .map(|i| {
            let cab = (sab - a[i] * b[i] - (sa - a[i]) * (sb - b[i]) / k) / (k - 1.0);
            let cmm = (smm - m[i] * m[i] - (sm - m[i]) * (sm - m[i]) / k) / (k - 1.0);
            cab - cmm
        })
        .collect();
    let lm = mean(&loo);
    let se = ((nf - 1.0) / nf * loo.iter().map(|d| (d - lm) * (d - lm)).sum::<f64>()).sqrt();
    (full, se)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldPair {
    pub a: [f64; 2],
    pub b: [f64; 2],
    /// `(t_a ∧ t_b, ϑ_a ∧ ϑ_b)`.
    pub min_point: [f64; 2],
    pub covariance: f64,
    pub variance_at_min: f64,
    pub discrepancy: f64,
    pub jackknife_se: f64,
    /// `|discrepancy| / jackknife_se` (0 for identical points).
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldReport {
    pub replicates: usize,
    /// Grid points `(t, ϑ)` in row-major order.
    pub points: Vec<[f64; 2]>,
    pub covariance_matrix: Vec<Vec<f64>>,
    pub pairs: Vec<FieldPair>,
    pub max_discrepancy: f64,
    pub max_ratio: f64,
    /// Tolerance on `ratio`.
    pub ratio_tolerance: f64,
}

/// Min-match check of the field covariance: for every pair of grid points,
/// `Ĉov(Ũ(t₁,ϑ₁), Ũ(t₂,ϑ₂)) − V̂ar(Ũ(t₁∧t₂, ϑ₁∧ϑ₂))` against its jackknife
/// standard error.
pub fn field_diagnostics(set: &ReplicateSet) -> Result<FieldReport> {
    require_replicates(set)?;
    let (tg, thg) = (&set.plan.t_grid, &set.plan.theta_grid);
    if tg.is_empty() {
        return Err(Error::InvalidArgument(
            "replicates carry no compensated-score field".into(),
        ));
    }
    let points: Vec<[f64; 2]> = tg.iter().flat_map(|&t| thg.iter().map(move |&th| [t, th])).collect();
    let series: Vec<Vec<f64>> = (0..points.len())
        .map(|p| set.records.iter().map(|r| r.field[p]).collect())
        .collect();
    let index_of = |t: f64, th: f64| {
        let i = tg.iter().position(|&x| x == t).unwrap_or(0);
        let j = thg.iter().position(|&x| x == th).unwrap_or(0);
        i * thg.len() + j
    };
    let covariance_matrix: Vec<Vec<f64>> = series
        .iter()
        .map(|x| series.iter().map(|y| covariance(x, y)).collect())
        .collect();
    let mut pairs = Vec::new();
    for a in 0..points.len() {
        for b in a..points.len() {
            let (pa, pb) = (points[a], points[b]);
            let mp = [pa[0].min(pb[0]), pa[1].min(pb[1])];
            let m = index_of(mp[0], mp[1]);
            let (discrepancy, jackknife_se) = if a == b {
                (covariance_matrix[a][a] - covariance_matrix[m][m], 0.0)
            } else {
                jackknife_discrepancy(&series[a], &series[b], &series[m])
            };
            let ratio = if a == b { 0.0 } else { discrepancy.abs() / jackknife_se };
            pairs.push(FieldPair {
                a: pa,
                b: pb,
                min_point: mp,
                covariance: covariance_matrix[a][b],
                variance_at_min: covariance_matrix[m][m],
                discrepancy,
                jackknife_se,
                ratio,
            });
        }
    }
    Ok(FieldReport {
        replicates: set.records.len(),
        max_discrepancy: pairs.iter().map(|p| p.discrepancy.abs()).fold(0.0, f64::max),
        max_ratio: pairs.iter().map(|p| p.ratio).fold(0.0, f64::max),
        ratio_tolerance: 4.0,
        points,
        covariance_matrix,
        pairs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanCheck {
    pub t: f64,
    pub theta: f64,
    pub mean: f64,
    pub se: f64,
    /// `mean / se`.
    pub z: f64,
    pub ok: bool,
}

/// Replicate mean of `Ũ(β₀; t, ϑ)/√n` at each grid point, with its
/// standard error; `ok` when within 3 standard errors of zero.
pub fn martingale_means(set: &ReplicateSet) -> Result<Vec<MeanCheck>> {
    if set.records.len() < 2 {
        return Err(Error::InsufficientReplicates {
            available: set.records.len(),
            required: 2,
        });
    }
    let nth = set.plan.theta_grid.len();
    Ok((0..set.plan.t_grid.len() * nth)
        .map(|p| {
            let xs: Vec<f64> = set.records.iter().map(|r| r.field[p]).collect();
            let m = mean(&xs);
            let se = (variance(&xs) / xs.len() as f64).sqrt();
            let z = if se > 0.0 { m / se } else { 0.0 };
            MeanCheck {
                t: set.plan.t_grid[p / nth],
                theta: set.plan.theta_grid[p % nth],
                mean: m,
                se,
                z,
                ok: z.abs() <= 3.0,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionVariance {
    pub v: f64,
    pub used: usize,
    pub unreached: usize,
    pub failed: usize,
    /// Sample variance of `√n·v·(β̂(v) − β₀)`.
    pub variance: f64,
    pub se: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Variance of `√n·v·(β̂(v) − β₀)` against `v` at each fraction of the
/// replicate plan.
pub fn fraction_variances(set: &ReplicateSet) -> Result<Vec<FractionVariance>> {
    require_replicates(set)?;
    let beta0 = set.true_beta();
    let mut out = Vec::new();
    for (k, &v) in set.plan.fraction_grid.iter().enumerate() {
        let mut xs = Vec::new();
        let (mut unreached, mut failed) = (0, 0);
        for r in &set.records {
            let f = &r.fractions[k];
            match (f.beta_hat, f.error.as_deref()) {
                (Some(b), _) => xs.push((r.n as f64).sqrt() * v * (b - beta0)),
                (None, Some(INFORMATION_NOT_REACHED)) => unreached += 1,
                _ => failed += 1,
            }
        }
        let variance_value = if xs.len() >= 2 { variance(&xs) } else { f64::NAN };
        let se = if xs.len() >= 2 {
            variance_standard_error(&xs)
        } else {
            f64::NAN
        };
        out.push(FractionVariance {
            v,
            used: xs.len(),
            unreached,
            failed,
            variance: variance_value,
            se,
            tolerance: 4.0 * se,
            ok: (variance_value - v).abs() <= 4.0 * se,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub used: usize,
    pub covered: usize,
    pub failed: usize,
    pub rate: f64,
    pub se: f64,
}

/// Share of replicates whose final 95% interval covers the true β.
/// Failed estimates are excluded and counted; more than 2% is an error.
pub fn coverage(set: &ReplicateSet) -> Result<CoverageReport> {
    require_replicates(set)?;
    let beta0 = set.true_beta();
    let (mut used, mut covered, mut failed) = (0, 0, 0);
    for r in &set.records {
        match r.final_estimate.as_ref().and_then(|e| e.ci_95) {
            Some([lo, hi]) => {
                used += 1;
                if lo <= beta0 && beta0 <= hi {
                    covered += 1;
                }
            }
            None => failed += 1,
        }
    }
    failed += set.failures.len();
    if failed as f64 > MAX_FAILURE_FRACTION * set.replicates() as f64 {
        return Err(Error::TooManyFailures {
            failed,
            total: set.replicates(),
        });
    }
    let rate = covered as f64 / used as f64;
    Ok(CoverageReport {
        used,
        covered,
        failed,
        rate,
        se: (rate * (1.0 - rate) / used as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RejectionReport {
    pub total: usize,
    pub rejections: usize,
    pub rate: f64,
    pub se: f64,
    /// Rejections per look (1-based look `k` at index `k − 1`).
    pub by_look: Vec<usize>,
}

/// Empirical sequential rejection rate from the replicates' monitoring.
pub fn type1_rate(set: &ReplicateSet) -> Result<RejectionReport> {
    require_replicates(set)?;
    let looks = set.plan.monitoring.as_ref().map_or(0, |p| p.v_grid.len());
    let mut by_look = vec![0; looks];
    let mut total = 0;
    for r in &set.records {
        let Some(m) = &r.monitoring else { continue };
        total += 1;
        if let Some(k) = m.stopping_look() {
            by_look[k - 1] += 1;
        }
    }
    let rejections: usize = by_look.iter().sum();
    let rate = rejections as f64 / total as f64;
    Ok(RejectionReport {
        total,
        rejections,
        rate,
        se: (rate * (1.0 - rate) / total as f64).sqrt(),
        by_look,
    })
}

/// Sequential rejection rate under `null_config` and final-interval
/// coverage under `coverage_config`, each over `replicates` trials.
pub fn type1_and_coverage(
    null_config: &DesignConfig,
    coverage_config: &DesignConfig,
    plan: &MonitoringPlan,
    replicates: usize,
) -> Result<(RejectionReport, CoverageReport)> {
    if replicates < MIN_REPLICATES {
        return Err(Error::InsufficientReplicates {
            available: replicates,
            required: MIN_REPLICATES,
        });
    }
    let monitoring = ValidationPlan {
        replicates,
        v_grid: Vec::new(),
        monitoring: Some(plan.clone()),
        ..ValidationPlan::default()
    };
    let estimation = ValidationPlan {
        replicates,
        v_grid: Vec::new(),
        estimate_final: true,
        ..ValidationPlan::default()
    };
    let rejection = type1_rate(&run_replicates(null_config, &monitoring)?)?;
    let cover = coverage(&run_replicates(coverage_config, &estimation)?)?;
    Ok((rejection, cover))
}

/// Everything the replicate plan supports, in one serialisable record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub replicates: usize,
    pub failed_replicates: usize,
    pub seed: u64,
    pub enrollment: usize,
    pub true_beta: f64,
    pub brownian: Option<BrownianReport>,
    pub field: Option<FieldReport>,
    pub martingale: Vec<MeanCheck>,
    pub fraction_variances: Vec<FractionVariance>,
    pub coverage: Option<CoverageReport>,
    pub type1: Option<RejectionReport>,
    pub oracle_max_error: Option<f64>,
}

impl DiagnosticsReport {
    pub fn from_set(set: &ReplicateSet) -> Result<Self> {
        require_replicates(set)?;
        let plan = &set.plan;
        let oracle = set
            .records
            .iter()
            .filter_map(|r| r.oracle_error)
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.max(e))));
        Ok(Self {
            replicates: set.replicates(),
            failed_replicates: set.failures.len(),
            seed: set.config.seed,
            enrollment: set.config.target_enrollment,
            true_beta: set.true_beta(),
            brownian: if plan.v_grid.is_empty() {
                None
            } else {
                Some(brownian_diagnostics(set, &plan.v_grid)?)
            },
            field: if plan.t_grid.is_empty() {
                None
            } else {
                Some(field_diagnostics(set)?)
            },
            martingale: if plan.t_grid.is_empty() {
                Vec::new()
            } else {
                martingale_means(set)?
            },
            fraction_variances: fraction_variances(set)?,
            coverage: if plan.estimate_final {
                Some(coverage(set)?)
            } else {
                None
            },
            type1: if plan.monitoring.is_some() {
                Some(type1_rate(set)?)
            } else {
                None
            },
            oracle_max_error: oracle,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use rand::Rng;

    #[test]
    fn jackknife_matches_brute_force() {
        let mut rng = stream(4, Purpose::Replicate, 0);
        let a: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = a.iter().map(|x| x + rng.random::<f64>()).collect();
        let m: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let (d, se) = jackknife_discrepancy(&a, &b, &m);
        assert!((d - (covariance(&a, &b) - variance(&m))).abs() < 1e-14);
        let drop = |x: &[f64], i: usize| {
            x.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, v)| *v)
                .collect::<Vec<f64>>()
        };
        let loo: Vec<f64> = (0..40)
            .map(|i| covariance(&drop(&a, i), &drop(&b, i)) - variance(&drop(&m, i)))
            .collect();
        let lm = mean(&loo);
        let brute = (39.0 / 40.0 * loo.iter().map(|x| (x - lm).powi(2)).sum::<f64>()).sqrt();
        assert!((se - brute).abs() < 1e-12 * brute.max(1.0));
    }

    #[test]
    fn identical_series_give_zero_discrepancy() {
        let a = [0.3, -1.2, 0.8, 2.0, -0.1];
        let (d, _) = jackknife_discrepancy(&a, &a, &a);
        assert!(d.abs() < 1e-15);
    }
}
