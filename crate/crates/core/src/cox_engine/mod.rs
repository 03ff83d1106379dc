//! Cox partial-likelihood quantities on the calendar-time / entry-time
//! scale: risk-set moments Γ_k, weighted covariate means Z̄, the log partial
//! likelihood, the one- and two-parameter score processes, observed
//! information, and the information estimator V̂.
//!
//! Risk-set conventions: subject `j` belongs to the risk set at calendar
//! time `t` and time-on-study `w` when `U_j + w <= t` (entered by `t - w`),
//! `T̃_j >= w`, and, for the subsample variant, `U_j <= ϑ`. An event of
//! subject `i` counts toward `U(β; t, ϑ)` when `Δ_i = 1`, `U_i <= ϑ` and
//! `U_i + T̃_i <= t`. All boundaries are closed.

mod table;

pub use table::EventRiskTable;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trial_core::TrialData;

/// Which subjects enter the weighted mean Z̄ inside `U(β; t, ϑ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreVariant {
    /// Everyone entered by `t - w`, regardless of ϑ.
    FullRiskset,
    /// Only subjects entered by `min(ϑ, t - w)`; the compensator cancels
    /// and the score is observable for ϑ < t.
    #[default]
    SubsampleRiskset,
}

impl ScoreVariant {
    pub(crate) fn entry_cap(self, theta: f64) -> f64 {
        match self {
            ScoreVariant::FullRiskset => f64::INFINITY,
            ScoreVariant::SubsampleRiskset => theta,
        }
    }
}

/// Risk-set moments `Γ₀`, `Γ₁`, `Γ₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gammas {
    pub g0: f64,
    pub g1: DVector<f64>,
    pub g2: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaValue {
    Scalar(f64),
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

/// Score, likelihood and information at one `(β, t, ϑ)` query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEvaluation {
    pub beta: DVector<f64>,
    pub t: f64,
    pub theta: f64,
    pub variant: ScoreVariant,
    pub score: DVector<f64>,
    pub loglik: f64,
    pub information: DMatrix<f64>,
    pub vhat: DMatrix<f64>,
    pub n_events_used: usize,
    /// Included events sharing their time-on-study with another included
    /// event. The closed risk-set boundary handles them Breslow-style.
    pub tied_events: usize,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_beta(data: &TrialData, beta: &[f64]) -> Result<()> {
    if beta.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            found: beta.len(),
        });
    }
    Ok(())
}

/// Running sums `Σ e`, `Σ e z`, `Σ e z z'` with `e = exp(β'z)`.
#[derive(Debug, Clone)]
pub(crate) struct RiskSums {
    pub s0: f64,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl RiskSums {
    pub fn new(d: usize) -> Self {
        Self {
            s0: 0.0,
            s1: vec![0.0; d],
            s2: vec![0.0; d * d],
        }
    }

    pub fn add(&mut self, beta: &[f64], z: &[f64]) {
        let d = z.len();
        let e = dot(beta, z).exp();
        self.s0 += e;
        for p in 0..d {
            self.s1[p] += e * z[p];
            for q in 0..d {
                self.s2[p * d + q] += e * z[p] * z[q];
            }
        }
    }
}

/// Sums over the risk set `{j : U_j <= entry_cap, U_j + w <= t, T̃_j >= w}`.
/// Subjects are scanned in entry order; both entry conditions are monotone,
/// so the scan stops at the first subject failing one.
pub(crate) fn risk_sums(data: &TrialData, beta: &[f64], t: f64, w: f64, entry_cap: f64) -> RiskSums {
    let mut sums = RiskSums::new(data.dim());
    for s in data.subjects() {
        if !(s.entry_time <= entry_cap && s.entry_time + w <= t) {
            break;
        }
        if s.observed_time >= w {
            sums.add(beta, s.z(w));
        }
    }
    sums
}

/// Accumulates one event's contribution to score, loglik, information and
/// V̂. Shared by the direct scan and [`EventRiskTable`] so both produce
/// identical floating-point results.
#[derive(Debug, Clone)]
pub(crate) struct ScoreAccum {
    d: usize,
    pub score: Vec<f64>,
    pub loglik: f64,
    pub information: Vec<f64>,
    pub vhat: Vec<f64>,
    pub events: usize,
}

impl ScoreAccum {
    pub fn new(d: usize) -> Self {
        Self {
            d,
            score: vec![0.0; d],
            loglik: 0.0,
            information: vec![0.0; d * d],
            vhat: vec![0.0; d * d],
            events: 0,
        }
    }

    pub fn add_event(&mut self, beta: &[f64], z: &[f64], s0: f64, s1: &[f64], s2: &[f64]) {
        let d = self.d;
        let mut resid = [0.0f64; 8];
        let mut resid_heap;
        let resid: &mut [f64] = if d <= 8 {
            &mut resid[..d]
        } else {
            resid_heap = vec![0.0; d];
            &mut resid_heap
        };
        for p in 0..d {
            let zbar = s1[p] / s0;
            resid[p] = z[p] - zbar;
            self.score[p] += resid[p];
        }
        for p in 0..d {
            let zp = s1[p] / s0;
            for q in 0..d {
                let zq = s1[q] / s0;
                self.information[p * d + q] += s2[p * d + q] / s0 - zp * zq;
                self.vhat[p * d + q] += resid[p] * resid[q];
            }
        }
        self.loglik += dot(beta, z) - s0.ln();
        self.events += 1;
    }
}

/// `Γ₀, Γ₁, Γ₂` over subjects with `U_i <= cutoff` and `T̃_i >= w`.
pub fn gammas(data: &TrialData, beta: &[f64], cutoff: f64, w: f64) -> Result<Gammas> {
    check_beta(data, beta)?;
    let d = data.dim();
    let mut sums = RiskSums::new(d);
    for s in data.subjects() {
        if s.entry_time > cutoff {
            break;
        }
        if s.observed_time >= w {
            sums.add(beta, s.z(w));
        }
    }
    Ok(Gammas {
        g0: sums.s0,
        g1: DVector::from_vec(sums.s1),
        g2: DMatrix::from_row_slice(d, d, &sums.s2),
    })
}

/// `Γ_k(β; cutoff, w)` for `k ∈ {0, 1, 2}`.
pub fn gamma_k(data: &TrialData, beta: &[f64], cutoff: f64, w: f64, k: usize) -> Result<GammaValue> {
    if !(cutoff >= 0.0 && w >= 0.0) {
        return Err(Error::InvalidArgument("cutoff and w must be nonnegative".into()));
    }
    let g = gammas(data, beta, cutoff, w)?;
    match k {
        0 => Ok(GammaValue::Scalar(g.g0)),
        1 => Ok(GammaValue::Vector(g.g1)),
        2 => Ok(GammaValue::Matrix(g.g2)),
        _ => Err(Error::InvalidArgument(format!("k must be 0, 1 or 2, got {k}"))),
    }
}

/// `Z̄(β; t, w) = Γ₁/Γ₀` over the variant's risk set.
pub fn zbar(data: &TrialData, beta: &[f64], t: f64, w: f64, variant: ScoreVariant, theta: f64) -> Result<DVector<f64>> {
    check_beta(data, beta)?;
    let sums = risk_sums(data, beta, t, w, variant.entry_cap(theta));
    if !(sums.s0 > 0.0) {
        return Err(Error::EmptyRiskSet { t, w });
    }
    Ok(DVector::from_iterator(data.dim(), sums.s1.iter().map(|x| x / sums.s0)))
}

/// `U(β; t, ϑ)` with log partial likelihood, observed information and V̂.
/// Reference implementation: one risk-set scan per included event.
pub fn score(data: &TrialData, beta: &[f64], t: f64, theta: f64, variant: ScoreVariant) -> Result<ScoreEvaluation> {
    check_beta(data, beta)?;
    if !(theta <= t) {
        return Err(Error::InvalidArgument(format!(
            "theta ({theta}) must not exceed t ({t})"
        )));
    }
    if !(t <= data.horizon()) {
        return Err(Error::InvalidArgument(format!(
            "t ({t}) must not exceed the horizon ({})",
            data.horizon()
        )));
    }
    let d = data.dim();
    let cap = variant.entry_cap(theta);
    let mut acc = ScoreAccum::new(d);
    let mut event_ws = Vec::new();
    for s in data.subjects() {
        if s.entry_time > theta {
            break;
        }
        if !s.event || !(s.completion_time() <= t) {
            continue;
        }
        let w = s.observed_time;
        let sums = risk_sums(data, beta, t, w, cap);
        if !(sums.s0 > 0.0) {
            return Err(Error::EmptyRiskSet { t, w });
        }
        acc.add_event(beta, s.z(w), sums.s0, &sums.s1, &sums.s2);
        event_ws.push(w);
    }
    event_ws.sort_by(f64::total_cmp);
    let tied_events = (0..event_ws.len())
        .filter(|&k| {
            (k > 0 && event_ws[k - 1] == event_ws[k]) || (k + 1 < event_ws.len() && event_ws[k + 1] == event_ws[k])
        })
        .count();
    Ok(finish(beta, t, theta, variant, acc, tied_events))
}

pub(crate) fn finish(
    beta: &[f64],
    t: f64,
    theta: f64,
    variant: ScoreVariant,
    acc: ScoreAccum,
    tied_events: usize,
) -> ScoreEvaluation {
    let d = beta.len();
    ScoreEvaluation {
        beta: DVector::from_column_slice(beta),
        t,
        theta,
        variant,
        score: DVector::from_vec(acc.score),
        loglik: acc.loglik,
        information: DMatrix::from_row_slice(d, d, &acc.information),
        vhat: DMatrix::from_row_slice(d, d, &acc.vhat),
        n_events_used: acc.events,
        tied_events,
    }
}

/// Worst relative error of central differences: `∂l/∂β` against the score
/// and `∂U/∂β` against `-information`. Errors are scaled by
/// `max(1, |analytic|)`.
pub fn score_gradient_check(
    data: &TrialData,
    beta: &[f64],
    t: f64,
    theta: f64,
    variant: ScoreVariant,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("step h must be positive".into()));
    }
    let base = score(data, beta, t, theta, variant)?;
    let d = beta.len();
    let mut worst: f64 = 0.0;
    let rel = |numeric: f64, analytic: f64| (numeric - analytic).abs() / analytic.abs().max(1.0);
    for p in 0..d {
        let mut up = beta.to_vec();
        let mut down = beta.to_vec();
        up[p] += h;
        down[p] -= h;
        let su = score(data, &up, t, theta, variant)?;
        let sd = score(data, &down, t, theta, variant)?;
        worst = worst.max(rel((su.loglik - sd.loglik) / (2.0 * h), base.score[p]));
        for q in 0..d {
            let numeric = (su.score[q] - sd.score[q]) / (2.0 * h);
            worst = worst.max(rel(numeric, -base.information[(q, p)]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_core::{CovariatePath, Subject};

    fn subj(entry: f64, z: f64, t: f64, event: bool) -> Subject {
        Subject::observed(entry, CovariatePath::constant(&[z]), 0, t, event).unwrap()
    }

    fn three() -> TrialData {
        TrialData::new(
            vec![
                subj(1.0, 0.0, 6.0, false),
                subj(2.0, 1.0, 6.0, false),
                subj(3.0, 1.0, 6.0, false),
            ],
            20.0,
        )
        .unwrap()
    }

    fn scalar(g: GammaValue) -> f64 {
        match g {
            GammaValue::Scalar(x) => x,
            GammaValue::Vector(v) => v[0],
            GammaValue::Matrix(m) => m[(0, 0)],
        }
    }

    #[test]
    fn gamma_counts_and_weights() {
        let data = three();
        assert_eq!(scalar(gamma_k(&data, &[0.0], 0.5, 0.5, 0).unwrap()), 0.0);
        assert_eq!(scalar(gamma_k(&data, &[0.0], 2.5, 0.5, 0).unwrap()), 2.0);
        assert_eq!(scalar(gamma_k(&data, &[0.0], 2.5, 0.5, 1).unwrap()), 1.0);
        let g0 = scalar(gamma_k(&data, &[2f64.ln()], 2.5, 0.5, 0).unwrap());
        assert!((g0 - 3.0).abs() < 1e-15);
        assert!(gamma_k(&data, &[0.0], 2.5, 0.5, 3).is_err());
    }

    #[test]
    fn zbar_weighted_means() {
        let one = TrialData::new(vec![subj(0.0, 2.5, 3.0, true)], 10.0).unwrap();
        let z = zbar(&one, &[0.7], 5.0, 1.0, ScoreVariant::FullRiskset, 5.0).unwrap();
        assert!((z[0] - 2.5).abs() < 1e-15);
        let two = TrialData::new(vec![subj(0.0, 0.0, 3.0, true), subj(0.5, 1.0, 3.0, true)], 10.0).unwrap();
        let z = zbar(&two, &[0.0], 5.0, 1.0, ScoreVariant::FullRiskset, 5.0).unwrap();
        assert!((z[0] - 0.5).abs() < 1e-15);
        let z = zbar(&two, &[2f64.ln()], 5.0, 1.0, ScoreVariant::FullRiskset, 5.0).unwrap();
        assert!((z[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            zbar(&two, &[0.0], 0.2, 1.0, ScoreVariant::FullRiskset, 0.2),
            Err(Error::EmptyRiskSet { .. })
        ));
    }

    #[test]
    fn empty_and_self_average_cases() {
        let data = three();
        let ev = score(&data, &[0.3], 10.0, 10.0, ScoreVariant::FullRiskset).unwrap();
        assert_eq!(ev.n_events_used, 0);
        assert_eq!((ev.score[0], ev.loglik, ev.vhat[(0, 0)]), (0.0, 0.0, 0.0));

        let one = TrialData::new(vec![subj(1.0, 1.3, 2.0, true)], 10.0).unwrap();
        let ev = score(&one, &[0.8], 5.0, 5.0, ScoreVariant::SubsampleRiskset).unwrap();
        assert_eq!(ev.n_events_used, 1);
        assert!(ev.score[0].abs() < 1e-15 && ev.loglik.abs() < 1e-15);
    }

    #[test]
    fn theta_cannot_exceed_t() {
        assert!(score(&three(), &[0.0], 2.0, 3.0, ScoreVariant::FullRiskset).is_err());
        assert!(matches!(
            score(&three(), &[0.0, 1.0], 2.0, 2.0, ScoreVariant::FullRiskset),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tied_times_on_study_are_flagged() {
        let data = TrialData::new(
            vec![
                subj(0.0, 0.0, 1.0, true),
                subj(0.5, 1.0, 1.0, true),
                subj(0.7, 1.0, 2.0, true),
            ],
            10.0,
        )
        .unwrap();
        let ev = score(&data, &[0.2], 5.0, 5.0, ScoreVariant::FullRiskset).unwrap();
        assert_eq!(ev.tied_events, 2);
    }

    #[test]
    fn zero_event_gradient_check_is_exact() {
        let err = score_gradient_check(&three(), &[0.4], 10.0, 10.0, ScoreVariant::FullRiskset, 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }
}
