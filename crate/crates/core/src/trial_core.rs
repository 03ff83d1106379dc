//! Domain model shared by every other module: covariate paths, subjects,
//! trial containers, hazard models and study design.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim_engine::AllocationKind;

/// Largest information fraction a design may target.
pub const MAX_INFORMATION_FRACTION: f64 = 1.0;

/// Right-continuous step function `w -> Z(w)` on time-on-study.
///
/// Segment `k` covers `[jump_times[k], jump_times[k + 1])`; the last segment
/// extends to infinity. `jump_times[0]` is always `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariatePath {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl CovariatePath {
    pub fn new(jump_times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if jump_times.is_empty() || jump_times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "covariate path needs one value per jump time ({} times, {} values)",
                jump_times.len(),
                values.len()
            )));
        }
        if jump_times[0] != 0.0 {
            return Err(Error::InvalidArgument("covariate path must start at w = 0".into()));
        }
        if jump_times.windows(2).any(|p| !(p[0] < p[1])) || !jump_times.iter().all(|w| w.is_finite()) {
            return Err(Error::InvalidArgument(
                "covariate jump times must be finite and strictly increasing".into(),
            ));
        }
        let dim = values[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("covariate dimension must be at least 1".into()));
        }
        let mut flat = Vec::with_capacity(dim * values.len());
        for v in &values {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if !v.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidArgument("covariate values must be finite".into()));
            }
            flat.extend_from_slice(v);
        }
        Ok(Self {
            jump_times,
            values: flat,
            dim,
        })
    }

    pub fn constant(value: &[f64]) -> Self {
        assert!(!value.is_empty(), "covariate dimension must be at least 1");
        Self {
            jump_times: vec![0.0],
            values: value.to_vec(),
            dim: value.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> usize {
        self.jump_times.len()
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn segment_value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Index of the segment containing `w`.
    pub fn segment_index(&self, w: f64) -> usize {
        self.jump_times.partition_point(|&j| j <= w).saturating_sub(1)
    }

    /// `Z(w)`; constant extrapolation past the last jump.
    pub fn at(&self, w: f64) -> &[f64] {
        self.segment_value(self.segment_index(w))
    }

    /// `|Z(0)|_1` plus the L1 size of every jump.
    pub fn total_variation(&self) -> f64 {
        let mut tv: f64 = self.segment_value(0).iter().map(|x| x.abs()).sum();
        for k in 1..self.segments() {
            tv += self
                .segment_value(k)
                .iter()
                .zip(self.segment_value(k - 1))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        }
        tv
    }

    /// Apply `f` to every value vector, keeping the jump times.
    pub fn map_values(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let values = (0..self.segments()).map(|k| f(self.segment_value(k))).collect();
        Self::new(self.jump_times.clone(), values)
    }
}

/// `Z(w)` for a covariate path.
pub fn covariate_at(path: &CovariatePath, w: f64) -> &[f64] {
    path.at(w)
}

/// Latent times that exist only for simulated subjects.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentTimes {
    pub event: f64,
    pub censor: f64,
}

/// One enrolled unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Subject {
    pub entry_time: f64,
    pub covariates: CovariatePath,
    pub latent: Option<LatentTimes>,
    pub observed_time: f64,
    pub event: bool,
    pub arm: usize,
}

impl Subject {
    /// Subject built from latent event and censoring times; the observed
    /// pair is derived as `(min(T, C), T <= C)`.
    pub fn from_latent(
        entry_time: f64,
        covariates: CovariatePath,
        arm: usize,
        latent_event: f64,
        latent_censor: f64,
    ) -> Result<Self> {
        if !(latent_event > 0.0) || !(latent_censor > 0.0) {
            return Err(Error::InvalidArgument(
                "latent event and censoring times must be positive".into(),
            ));
        }
        Ok(Self {
            entry_time,
            covariates,
            latent: Some(LatentTimes {
                event: latent_event,
                censor: latent_censor,
            }),
            observed_time: latent_event.min(latent_censor),
            event: latent_event <= latent_censor,
            arm,
        })
    }

    /// Subject known only through its observed data (ingested trials).
    pub fn observed(
        entry_time: f64,
        covariates: CovariatePath,
        arm: usize,
        observed_time: f64,
        event: bool,
    ) -> Result<Self> {
        if !(observed_time >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "observed time must be nonnegative, got {observed_time}"
            )));
        }
        Ok(Self {
            entry_time,
            covariates,
            latent: None,
            observed_time,
            event,
            arm,
        })
    }

    /// Calendar time at which follow-up ends (event or censoring).
    pub fn completion_time(&self) -> f64 {
        self.entry_time + self.observed_time
    }

    pub fn event_indicator(&self) -> u8 {
        u8::from(self.event)
    }

    pub fn z(&self, w: f64) -> &[f64] {
        self.covariates.at(w)
    }
}

/// `1(T̃ >= w)`: the subject is still at risk at time-on-study `w`.
pub fn risk_indicator(subject: &Subject, w: f64) -> bool {
    subject.observed_time >= w
}

/// A completed trial: subjects ordered by strictly increasing entry time.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialData {
    subjects: Vec<Subject>,
    horizon: f64,
    dim: usize,
    pub true_beta: Option<Vec<f64>>,
    pub baseline_hazard: Option<HazardSpec>,
}

impl TrialData {
    pub fn new(subjects: Vec<Subject>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let dim = subjects.first().map_or(1, |s| s.covariates.dim());
        for (i, s) in subjects.iter().enumerate() {
            if !(s.entry_time >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "entry time of subject {i} must be nonnegative"
                )));
            }
            if !(s.entry_time < horizon) {
                return Err(Error::EntryAfterHorizon {
                    index: i,
                    entry: s.entry_time,
                    horizon,
                });
            }
            if i > 0 && !(subjects[i - 1].entry_time < s.entry_time) {
                return Err(Error::EntryTimeTie {
                    index: i,
                    previous: subjects[i - 1].entry_time,
                    current: s.entry_time,
                });
            }
            if s.covariates.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.covariates.dim(),
                });
            }
        }
        Ok(Self {
            subjects,
            horizon,
            dim,
            true_beta: None,
            baseline_hazard: None,
        })
    }

    pub fn with_truth(mut self, beta: Vec<f64>, hazard: HazardSpec) -> Self {
        self.true_beta = Some(beta);
        self.baseline_hazard = Some(hazard);
        self
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Covariate dimension `d` (1 for an empty trial).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R_t`, the number of subjects entered by calendar time `t`.
    pub fn entry_count(&self, t: f64) -> usize {
        self.subjects.partition_point(|s| s.entry_time <= t)
    }

    pub fn event_count(&self) -> usize {
        self.subjects.iter().filter(|s| s.event).count()
    }

    /// Sorted, de-duplicated calendar times of observed events.
    pub fn event_calendar_times(&self) -> Vec<f64> {
        let mut times: Vec<f64> = self
            .subjects
            .iter()
            .filter(|s| s.event)
            .map(Subject::completion_time)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }

    /// The trial as it would be seen at calendar time `t`: subjects entered by
    /// `t`, follow-up truncated at `t - U_i`, events after `t` turned into
    /// censorings. Latent times are dropped.
    pub fn observed_at(&self, t: f64) -> TrialData {
        let subjects = self.subjects[..self.entry_count(t)]
            .iter()
            .map(|s| {
                let window = t - s.entry_time;
                let (observed_time, event) = if s.completion_time() <= t {
                    (s.observed_time, s.event)
                } else {
                    (window, false)
                };
                Subject {
                    entry_time: s.entry_time,
                    covariates: s.covariates.clone(),
                    latent: None,
                    observed_time,
                    event,
                    arm: s.arm,
                }
            })
            .collect();
        TrialData {
            subjects,
            horizon: self.horizon,
            dim: self.dim,
            true_beta: self.true_beta.clone(),
            baseline_hazard: self.baseline_hazard.clone(),
        }
    }

    /// Copy with every latent field cleared (what serialization preserves).
    pub fn without_latent(&self) -> TrialData {
        let mut out = self.clone();
        for s in &mut out.subjects {
            s.latent = None;
        }
        out
    }

    /// Replace every covariate path by `f(path)`.
    pub fn map_covariates(&self, mut f: impl FnMut(&CovariatePath) -> CovariatePath) -> Result<TrialData> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| Subject {
                covariates: f(&s.covariates),
                ..s.clone()
            })
            .collect();
        let mut out = TrialData::new(subjects, self.horizon)?;
        out.true_beta = self.true_beta.clone();
        out.baseline_hazard = self.baseline_hazard.clone();
        Ok(out)
    }
}

/// Piecewise-constant baseline hazard plus censoring mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardSpec {
    /// Interior cut points on time-on-study; `rates.len() == cut_points.len() + 1`.
    pub cut_points: Vec<f64>,
    pub rates: Vec<f64>,
    /// Exponential censoring hazard (0 disables random censoring).
    pub censor_rate: f64,
    /// Administrative censoring at this calendar time.
    pub admin_horizon: f64,
}

impl HazardSpec {
    pub fn new(cut_points: Vec<f64>, rates: Vec<f64>, censor_rate: f64, admin_horizon: f64) -> Result<Self> {
        let hazard = Self {
            cut_points,
            rates,
            censor_rate,
            admin_horizon,
        };
        hazard.validate()?;
        Ok(hazard)
    }

    pub fn constant(rate: f64, censor_rate: f64, admin_horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![rate], censor_rate, admin_horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(Error::validation("rates", "at least one baseline rate is required"));
        }
        if self.rates.len() != self.cut_points.len() + 1 {
            return Err(Error::validation(
                "cut_points",
                format!(
                    "{} rates need {} cut points, got {}",
                    self.rates.len(),
                    self.rates.len() - 1,
                    self.cut_points.len()
                ),
            ));
        }
        if !self.rates.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(Error::validation("rates", "all rates must be positive and finite"));
        }
        if self.cut_points.first().is_some_and(|c| !(*c > 0.0))
            || self.cut_points.windows(2).any(|p| !(p[0] < p[1]))
            || !self.cut_points.iter().all(|c| c.is_finite())
        {
            return Err(Error::validation(
                "cut_points",
                "cut points must be positive, finite and strictly increasing",
            ));
        }
        if !(self.censor_rate >= 0.0) || !self.censor_rate.is_finite() {
            return Err(Error::validation("censor_rate", "must be nonnegative and finite"));
        }
        if !(self.admin_horizon > 0.0) {
            return Err(Error::validation("horizon", "must be positive"));
        }
        Ok(())
    }

    pub fn segment_index(&self, w: f64) -> usize {
        self.cut_points.partition_point(|&c| c <= w)
    }

    /// `λ₀(w)`.
    pub fn rate_at(&self, w: f64) -> f64 {
        self.rates[self.segment_index(w)]
    }

    /// `Λ₀(w) = ∫₀^w λ₀`.
    pub fn cumulative(&self, w: f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        for (k, &rate) in self.rates.iter().enumerate() {
            let end = self.cut_points.get(k).copied().unwrap_or(f64::INFINITY);
            if w <= start {
                break;
            }
            total += rate * (w.min(end) - start);
            start = end;
        }
        total
    }
}

/// How entry times are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum EntryProcess {
    /// Exponential inter-arrival gaps with this rate.
    Poisson { rate: f64 },
    /// Explicit calendar entry times.
    FixedSchedule(Vec<f64>),
}

/// Covariate path assigned to each arm.
///
/// Subjects on arm `a` get the constant vector `codes[a]`; when `switch` is
/// set they move to `switch.1[a]` at time-on-study `switch.0` (an external
/// time-dependent covariate, e.g. planned crossover).
#[derive(Debug, Clone, PartialEq)]
pub struct ArmCovariates {
    pub codes: Vec<Vec<f64>>,
    pub switch: Option<(f64, Vec<Vec<f64>>)>,
}

impl ArmCovariates {
    pub fn binary() -> Self {
        Self {
            codes: vec![vec![0.0], vec![1.0]],
            switch: None,
        }
    }

    pub fn symmetric(half_spread: f64) -> Self {
        Self {
            codes: vec![vec![-half_spread], vec![half_spread]],
            switch: None,
        }
    }

    pub fn arms(&self) -> usize {
        self.codes.len()
    }

    pub fn dim(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    pub fn path_for(&self, arm: usize) -> CovariatePath {
        match &self.switch {
            None => CovariatePath::constant(&self.codes[arm]),
            Some((at, later)) => CovariatePath::new(vec![0.0, *at], vec![self.codes[arm].clone(), later[arm].clone()])
                .expect("validated arm covariates"),
        }
    }

    pub fn validate(&self, bound: f64) -> Result<()> {
        if self.codes.len() < 2 {
            return Err(Error::validation("arm_codes", "at least two arms are required"));
        }
        let d = self.dim();
        if d == 0 || self.codes.iter().any(|c| c.len() != d) {
            return Err(Error::validation(
                "arm_codes",
                "every arm needs a covariate vector of the same nonzero length",
            ));
        }
        if let Some((at, later)) = &self.switch {
            if !(*at > 0.0) || !at.is_finite() {
                return Err(Error::validation("switch_time", "must be positive and finite"));
            }
            if later.len() != self.codes.len() || later.iter().any(|c| c.len() != d) {
                return Err(Error::validation("switch_codes", "must match arm_codes in shape"));
            }
        }
        for arm in 0..self.arms() {
            let tv = self.path_for(arm).total_variation();
            if tv > bound {
                return Err(Error::validation(
                    "covariate_bound",
                    format!("arm {arm} covariate path has total variation {tv} > bound {bound}"),
                ));
            }
        }
        Ok(())
    }
}

/// Full study design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    pub target_enrollment: usize,
    pub entry_process: EntryProcess,
    pub allocation: AllocationKind,
    pub hazard: HazardSpec,
    pub covariates: ArmCovariates,
    pub beta0: Vec<f64>,
    /// Planned total information `V_n`.
    pub planned_information: f64,
    pub v_bar: f64,
    /// Bound `K_τ` on the covariate paths' total variation.
    pub covariate_bound: f64,
    pub seed: u64,
}

impl DesignConfig {
    /// Design with `V_n = n`, `v̄ = 1` and a generous covariate bound.
    pub fn new(
        target_enrollment: usize,
        entry_process: EntryProcess,
        allocation: AllocationKind,
        hazard: HazardSpec,
        covariates: ArmCovariates,
        beta0: Vec<f64>,
        seed: u64,
    ) -> Self {
        Self {
            target_enrollment,
            entry_process,
            allocation,
            hazard,
            covariates,
            beta0,
            planned_information: target_enrollment as f64,
            v_bar: MAX_INFORMATION_FRACTION,
            covariate_bound: 100.0,
            seed,
        }
    }

    pub fn horizon(&self) -> f64 {
        self.hazard.admin_horizon
    }

    pub fn dim(&self) -> usize {
        self.covariates.dim()
    }

    /// Checks needed to simulate (allows `n = 1`).
    pub fn validate_for_simulation(&self) -> Result<()> {
        if self.target_enrollment < 1 {
            return Err(Error::validation("target_enrollment", "must be at least 1"));
        }
        self.hazard.validate()?;
        self.covariates.validate(self.covariate_bound)?;
        if self.beta0.len() != self.dim() {
            return Err(Error::validation(
                "beta0",
                format!(
                    "length {} does not match covariate dimension {}",
                    self.beta0.len(),
                    self.dim()
                ),
            ));
        }
        if !self.beta0.iter().all(|b| b.is_finite()) {
            return Err(Error::validation("beta0", "must be finite"));
        }
        self.allocation.validate(self.covariates.arms())?;
        match &self.entry_process {
            EntryProcess::Poisson { rate } if !(*rate > 0.0 && rate.is_finite()) => {
                return Err(Error::validation("entry_rate", "must be positive and finite"));
            }
            EntryProcess::FixedSchedule(times) if times.len() < self.target_enrollment => {
                return Err(Error::validation(
                    "entry_schedule",
                    format!("{} times given for {} subjects", times.len(), self.target_enrollment),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Full design validation, including the information-scale sanity checks.
    pub fn validate(&self) -> Result<()> {
        if self.target_enrollment < 2 {
            return Err(Error::validation("target_enrollment", "must be at least 2"));
        }
        self.validate_for_simulation()?;
        if !(self.planned_information > 0.0) || !self.planned_information.is_finite() {
            return Err(Error::validation("planned_information", "must be positive and finite"));
        }
        if !(self.v_bar > 0.0 && self.v_bar <= MAX_INFORMATION_FRACTION) {
            return Err(Error::validation(
                "v_bar",
                format!("must lie in (0, {MAX_INFORMATION_FRACTION}]"),
            ));
        }
        if !self.horizon().is_finite() {
            return Err(Error::validation("horizon", "must be finite"));
        }
        if !(self.covariate_bound > 0.0) {
            return Err(Error::validation("covariate_bound", "must be positive"));
        }
        Ok(())
    }
}
