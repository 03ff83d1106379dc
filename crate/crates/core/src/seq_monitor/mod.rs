//! Group-sequential monitoring of the rescaled score `B̂_n(v)` with
//! Lan–DeMets alpha-spending boundaries.

mod boundaries;

pub use boundaries::{
    boundaries_with_nodes, spending_value, BoundaryRecursion, Sidedness, Spending, DEFAULT_NODES, MASS_TOLERANCE,
    SUPPORT_SD,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_time::{check_grid, InformationPoint, InformationTracker};
use crate::trial_core::{TrialData, MAX_INFORMATION_FRACTION};

/// Largest allowed disagreement between boundaries computed on the default
/// grid and on a grid of doubled resolution.
pub const SELF_TEST_TOLERANCE: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringPlan {
    pub v_grid: Vec<f64>,
    pub alpha: f64,
    pub spending: Spending,
    pub sidedness: Sidedness,
    /// Critical values on the z scale at the planned fractions.
    pub boundaries: Vec<f64>,
}

impl MonitoringPlan {
    /// Plan with boundaries computed (and self-tested) at `v_grid`.
    pub fn new(v_grid: Vec<f64>, alpha: f64, spending: Spending, sidedness: Sidedness) -> Result<Self> {
        let mut plan = Self {
            v_grid,
            alpha,
            spending,
            sidedness,
            boundaries: Vec::new(),
        };
        plan.boundaries = compute_boundaries(&plan)?;
        Ok(plan)
    }

    /// `K` equally spaced looks ending at full information.
    pub fn equally_spaced(looks: usize, alpha: f64, spending: Spending, sidedness: Sidedness) -> Result<Self> {
        if looks == 0 {
            return Err(Error::validation("looks", "must be at least 1"));
        }
        let grid = (1..=looks).map(|k| k as f64 / looks as f64).collect();
        Self::new(grid, alpha, spending, sidedness)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(&self.v_grid)
            .map_err(|_| Error::validation("v_grid", "must be positive and strictly increasing"))?;
        if self.v_grid.is_empty() {
            return Err(Error::validation("v_grid", "needs at least one look"));
        }
        if self.v_grid.last().is_some_and(|&v| v > MAX_INFORMATION_FRACTION) {
            return Err(Error::validation("v_grid", "fractions must not exceed 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("alpha", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Cumulative alpha spent at each planned look.
    pub fn alpha_spent(&self) -> Vec<f64> {
        self.v_grid
            .iter()
            .map(|&v| spending_value(self.spending, self.sidedness, self.alpha, v))
            .collect()
    }
}

/// Critical values at the plan's fractions. The recursion is repeated on a
/// grid of doubled resolution and the two answers must agree to
/// [`SELF_TEST_TOLERANCE`].
pub fn compute_boundaries(plan: &MonitoringPlan) -> Result<Vec<f64>> {
    plan.validate()?;
    let base = boundaries_with_nodes(&plan.v_grid, plan.alpha, plan.spending, plan.sidedness, DEFAULT_NODES)?;
    let fine = boundaries_with_nodes(
        &plan.v_grid,
        plan.alpha,
        plan.spending,
        plan.sidedness,
        2 * DEFAULT_NODES - 1,
    )?;
    let worst = base
        .iter()
        .zip(&fine)
        .filter(|(a, b)| a.is_finite() || b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(worst <= SELF_TEST_TOLERANCE) {
        return Err(Error::QuadratureFailure { discrepancy: worst });
    }
    Ok(base)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Continue,
    Reject,
    AcceptFailToReach,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Continue => "continue",
            Action::Reject => "reject",
            Action::AcceptFailToReach => "accept_fail_to_reach",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringDecision {
    pub look_index: usize,
    pub planned_v: f64,
    /// Attained fraction `V̂(σ̂)/V_n`; absent when the look was not reached.
    pub v: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub bhat: Option<f64>,
    /// `B̂ / √v` at the attained fraction.
    pub z_statistic: Option<f64>,
    pub boundary: Option<f64>,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoringOutcome {
    pub decisions: Vec<MonitoringDecision>,
    /// Latest calendar time at which any statistic was evaluated.
    pub evaluated_through: Option<f64>,
}

impl MonitoringOutcome {
    pub fn rejected(&self) -> bool {
        self.stopping_look().is_some()
    }

    /// 1-based index of the rejecting look.
    pub fn stopping_look(&self) -> Option<usize> {
        self.decisions
            .iter()
            .find(|d| d.action == Action::Reject)
            .map(|d| d.look_index)
    }
}

/// Monitor `data` at the plan's looks under `β = null_beta`. Each look
/// waits for the first event time at which `V̂/V_n` reaches its planned
/// fraction; the boundary is recomputed at the attained fraction. Stops at
/// the first rejection and never evaluates the score past that look.
pub fn monitor_trial(
    data: &TrialData,
    plan: &MonitoringPlan,
    null_beta: f64,
    planned: f64,
) -> Result<MonitoringOutcome> {
    plan.validate()?;
    if !(planned > 0.0) {
        return Err(Error::validation("planned_information", "must be positive"));
    }
    let mut tracker = InformationTracker::new(data, null_beta)?;
    let mut recursion = BoundaryRecursion::new(plan.alpha, plan.spending, plan.sidedness)?;
    let mut decisions = Vec::with_capacity(plan.v_grid.len());
    let mut current: Option<InformationPoint> = None;
    let mut last_attained = 0.0;
    let mut exhausted = false;

    for (k, &v) in plan.v_grid.iter().enumerate() {
        let look_index = k + 1;
        while !exhausted && !current.is_some_and(|p| p.vhat / planned >= v) {
            match tracker.next() {
                Some(p) => current = Some(p?),
                None => exhausted = true,
            }
        }
        let point = match current {
            Some(p) if p.vhat / planned >= v => p,
            _ => {
                decisions.push(MonitoringDecision {
                    look_index,
                    planned_v: v,
                    v: None,
                    sigma_hat: None,
                    bhat: None,
                    z_statistic: None,
                    boundary: None,
                    action: Action::AcceptFailToReach,
                });
                continue;
            }
        };
        let attained = point.vhat / planned;
        let boundary = if attained > last_attained {
            last_attained = attained;
            recursion.push_look(attained)?
        } else {
            f64::INFINITY
        };
        let bhat = point.score / planned.sqrt();
        let z = bhat / attained.sqrt();
        let crossed = match plan.sidedness {
            Sidedness::Two => z.abs() >= boundary,
            Sidedness::One => z >= boundary,
        };
        decisions.push(MonitoringDecision {
            look_index,
            planned_v: v,
            v: Some(attained),
            sigma_hat: Some(point.t),
            bhat: Some(bhat),
            z_statistic: Some(z),
            boundary: Some(boundary),
            action: if crossed { Action::Reject } else { Action::Continue },
        });
        if crossed {
            break;
        }
    }
    Ok(MonitoringOutcome {
        decisions,
        evaluated_through: tracker.evaluated_through(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_core::{CovariatePath, Subject};

    #[test]
    fn spending_endpoints() {
        for s in [Spending::ObrienFlemingType, Spending::PocockType, Spending::Linear] {
            for side in [Sidedness::One, Sidedness::Two] {
                assert!((spending_value(s, side, 0.05, 1.0) - 0.05).abs() < 1e-15);
                assert_eq!(spending_value(s, side, 0.05, 0.0), 0.0);
                let mut prev = 0.0;
                for i in 1..=100 {
                    let a = spending_value(s, side, 0.05, i as f64 / 100.0);
                    assert!(a >= prev && a <= 0.05 + 1e-15);
                    prev = a;
                }
            }
        }
        assert!((spending_value(Spending::Linear, Sidedness::Two, 0.05, 0.4) - 0.02).abs() < 1e-15);
        assert!((spending_value(Spending::PocockType, Sidedness::Two, 0.05, 1.0) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn single_look_gives_normal_quantile() {
        for s in [Spending::ObrienFlemingType, Spending::PocockType, Spending::Linear] {
            let two = MonitoringPlan::new(vec![1.0], 0.05, s, Sidedness::Two).unwrap();
            assert!((two.boundaries[0] - 1.959_964).abs() < 1e-4);
            let one = MonitoringPlan::new(vec![1.0], 0.025, s, Sidedness::One).unwrap();
            assert!((one.boundaries[0] - 1.959_964).abs() < 1e-4);
        }
    }

    #[test]
    fn obrien_fleming_two_looks() {
        let plan = MonitoringPlan::equally_spaced(2, 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap();
        assert!((plan.boundaries[0] - 2.963).abs() < 5e-3, "{:?}", plan.boundaries);
        assert!((plan.boundaries[1] - 1.969).abs() < 5e-3, "{:?}", plan.boundaries);
    }

    #[test]
    fn increments_sum_to_alpha() {
        let mut rec = BoundaryRecursion::new(0.05, Spending::PocockType, Sidedness::Two).unwrap();
        for v in [0.2, 0.4, 0.6, 0.8, 1.0] {
            rec.push_look(v).unwrap();
        }
        let total: f64 = rec.crossings().iter().sum();
        assert!((total - 0.05).abs() < 1e-12);
        assert!(rec.push_look(1.0).is_err());
    }

    #[test]
    fn nothing_left_to_spend_gives_infinite_boundary() {
        let mut rec = BoundaryRecursion::new(0.05, Spending::Linear, Sidedness::Two).unwrap();
        rec.push_look(1.0).unwrap();
        assert!(rec.push_look(1.2).unwrap().is_infinite());
    }

    #[test]
    fn zero_event_trial_fails_to_reach_every_look() {
        let s = Subject::observed(0.0, CovariatePath::constant(&[1.0]), 1, 1.0, false).unwrap();
        let data = TrialData::new(vec![s], 5.0).unwrap();
        let plan = MonitoringPlan::equally_spaced(3, 0.05, Spending::ObrienFlemingType, Sidedness::Two).unwrap();
        let out = monitor_trial(&data, &plan, 0.0, 1.0).unwrap();
        assert_eq!(out.decisions.len(), 3);
        assert!(out.decisions.iter().all(|d| d.action == Action::AcceptFailToReach));
        assert_eq!(out.evaluated_through, None);
    }
}
