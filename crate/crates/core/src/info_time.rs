//! Information-time rescaling for a scalar covariate: the observed
//! information path `V̂_{n,t}`, first-crossing times `σ̂_{n,v}` and the
//! rescaled score `B̂_n(v) = U(β; σ̂_{n,v}) / √V_n`.
//!
//! `V̂_{n,t}` is only evaluated at observed event times. Because Z̄ inside
//! every summand depends on `t`, the whole sum is recomputed at each event
//! time; it is not a running total and may dip at finite `n`.

use crate::cox_engine::{EventRiskTable, ScoreVariant};
use crate::error::{Error, Result};
use crate::trial_core::TrialData;

#[derive(Debug, Clone, PartialEq)]
pub struct InformationPath {
    pub beta: f64,
    /// Distinct calendar event times, increasing.
    pub event_times: Vec<f64>,
    pub vhat_at_events: Vec<f64>,
    /// `U(β; t)` at the same times.
    pub score_at_events: Vec<f64>,
    /// Planned total information `V_n`.
    pub planned: f64,
}

impl InformationPath {
    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    pub fn fraction(&self, k: usize) -> f64 {
        self.vhat_at_events[k] / self.planned
    }

    pub fn max_fraction(&self) -> f64 {
        (0..self.len()).map(|k| self.fraction(k)).fold(0.0, f64::max)
    }
}

fn require_scalar(data: &TrialData) -> Result<()> {
    if data.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: data.dim(),
        });
    }
    Ok(())
}

fn check_planned(planned: f64) -> Result<()> {
    if !(planned > 0.0) || !planned.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "planned information must be positive, got {planned}"
        )));
    }
    Ok(())
}

/// Lazily evaluates the information path event by event and remembers the
/// latest calendar time it has looked at.
pub struct InformationTracker<'a> {
    table: EventRiskTable<'a>,
    times: Vec<f64>,
    next: usize,
    evaluated_through: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformationPoint {
    pub index: usize,
    pub t: f64,
    pub vhat: f64,
    pub score: f64,
}

impl<'a> InformationTracker<'a> {
    pub fn new(data: &'a TrialData, beta: f64) -> Result<Self> {
        require_scalar(data)?;
        Ok(Self {
            table: EventRiskTable::new(data, &[beta])?,
            times: data.event_calendar_times(),
            next: 0,
            evaluated_through: None,
        })
    }

    pub fn evaluated_through(&self) -> Option<f64> {
        self.evaluated_through
    }

    pub fn remaining(&self) -> usize {
        self.times.len() - self.next
    }
}

impl Iterator for InformationTracker<'_> {
    type Item = Result<InformationPoint>;

    fn next(&mut self) -> Option<Self::Item> {
        let &t = self.times.get(self.next)?;
        let index = self.next;
        self.next += 1;
        self.evaluated_through = Some(t);
        Some(
            self.table
                .evaluate(t, t, ScoreVariant::FullRiskset)
                .map(|ev| InformationPoint {
                    index,
                    t,
                    vhat: ev.vhat[(0, 0)],
                    score: ev.score[0],
                }),
        )
    }
}

/// `V̂_{n,t,t}(β)` and `U(β; t)` at every observed event time.
pub fn information_path(data: &TrialData, beta: f64, planned: f64) -> Result<InformationPath> {
    check_planned(planned)?;
    let mut path = InformationPath {
        beta,
        event_times: Vec::new(),
        vhat_at_events: Vec::new(),
        score_at_events: Vec::new(),
        planned,
    };
    for point in InformationTracker::new(data, beta)? {
        let p = point?;
        path.event_times.push(p.t);
        path.vhat_at_events.push(p.vhat);
        path.score_at_events.push(p.score);
    }
    Ok(path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaHat {
    /// Calendar time `σ̂_{n,v}`.
    pub time: f64,
    /// Index of that event time in the path.
    pub index: usize,
    /// `V̂_{n,σ̂}/V_n`, at least `v`.
    pub attained: f64,
}

/// Earliest event time at which `V̂/V_n >= v` (first crossing).
pub fn sigma_hat(path: &InformationPath, v: f64) -> Result<SigmaHat> {
    if !(v > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "information fraction must be positive, got {v}"
        )));
    }
    first_crossing(path, v, 0).ok_or(Error::InformationNotReached {
        v,
        max_attained: path.max_fraction(),
    })
}

fn first_crossing(path: &InformationPath, v: f64, from: usize) -> Option<SigmaHat> {
    (from..path.len()).find(|&k| path.fraction(k) >= v).map(|k| SigmaHat {
        time: path.event_times[k],
        index: k,
        attained: path.fraction(k),
    })
}

/// Event times after the first crossing of `v` at which the information
/// fraction falls back below `v`.
pub fn information_dips(path: &InformationPath, v: f64) -> Vec<f64> {
    match first_crossing(path, v, 0) {
        None => Vec::new(),
        Some(s) => (s.index + 1..path.len())
            .filter(|&k| path.fraction(k) < v)
            .map(|k| path.event_times[k])
            .collect(),
    }
}

/// `B̂_n` on a grid of information fractions. Unreached fractions are
/// `None` rather than errors.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub v_grid: Vec<f64>,
    pub sigma_hat: Vec<Option<f64>>,
    pub attained: Vec<Option<f64>>,
    pub bhat: Vec<Option<f64>>,
    /// Whether `V̂/V_n` dipped back below `v` after `σ̂_{n,v}`.
    pub dipped: Vec<bool>,
}

impl RescaledPath {
    pub fn reached(&self, k: usize) -> bool {
        self.bhat[k].is_some()
    }
}

pub(crate) fn check_grid(v_grid: &[f64]) -> Result<()> {
    if v_grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) || v_grid.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidArgument(
            "information fractions must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Rescaled path from a precomputed information path.
pub fn rescale(path: &InformationPath, v_grid: &[f64]) -> Result<RescaledPath> {
    check_grid(v_grid)?;
    let root = path.planned.sqrt();
    let mut out = RescaledPath {
        v_grid: v_grid.to_vec(),
        sigma_hat: Vec::with_capacity(v_grid.len()),
        attained: Vec::with_capacity(v_grid.len()),
        bhat: Vec::with_capacity(v_grid.len()),
        dipped: Vec::with_capacity(v_grid.len()),
    };
    let mut from = 0;
    for &v in v_grid {
        match first_crossing(path, v, from) {
            Some(s) => {
                from = s.index;
                out.sigma_hat.push(Some(s.time));
                out.attained.push(Some(s.attained));
                out.bhat.push(Some(path.score_at_events[s.index] / root));
                out.dipped.push((s.index + 1..path.len()).any(|k| path.fraction(k) < v));
            }
            None => {
                out.sigma_hat.push(None);
                out.attained.push(None);
                out.bhat.push(None);
                out.dipped.push(false);
            }
        }
    }
    Ok(out)
}

/// `B̂_n(v) = U(β; σ̂_{n,v}) / √V_n` for each `v` in the grid.
pub fn bhat_path(data: &TrialData, beta: f64, v_grid: &[f64], planned: f64) -> Result<RescaledPath> {
    check_grid(v_grid)?;
    rescale(&information_path(data, beta, planned)?, v_grid)
}
