//! TOML run configuration with sections `[design]`, `[hazard]`,
//! `[allocation]`, `[monitoring]` and `[validation]`. Unknown sections and
//! keys are rejected; problems are reported by key name.

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::estimator::MpleOptions;
use crate::mc_validate::ValidationPlan;
use crate::seq_monitor::{MonitoringPlan, Sidedness, Spending};
use crate::sim_engine::{AllocationKind, ResponseRule};
use crate::trial_core::{ArmCovariates, DesignConfig, EntryProcess, HazardSpec, MAX_INFORMATION_FRACTION};

const SECTIONS: [&str; 5] = ["design", "hazard", "allocation", "monitoring", "validation"];

const DESIGN_KEYS: [&str; 13] = [
    "target_enrollment",
    "entry_process",
    "entry_rate",
    "entry_schedule",
    "horizon",
    "beta0",
    "planned_information",
    "v_bar",
    "seed",
    "covariate_bound",
    "arm_codes",
    "switch_time",
    "switch_codes",
];
const HAZARD_KEYS: [&str; 3] = ["cut_points", "rates", "censor_rate"];
const ALLOCATION_KEYS: [&str; 6] = [
    "policy",
    "p",
    "initial_balls_per_arm",
    "balls_added",
    "response_window",
    "response_rule",
];
const MONITORING_KEYS: [&str; 6] = ["v_grid", "looks", "alpha", "spending", "sidedness", "null_beta"];
const VALIDATION_KEYS: [&str; 10] = [
    "replicates",
    "v_grid",
    "t_grid",
    "theta_grid",
    "reference_beta",
    "oracle_checks",
    "estimate_final",
    "fraction_grid",
    "monitor",
    "null_beta",
];

/// Monitoring settings; boundaries are computed on demand by
/// [`MonitoringSettings::plan`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringSettings {
    pub v_grid: Vec<f64>,
    pub alpha: f64,
    pub spending: Spending,
    pub sidedness: Sidedness,
    pub null_beta: f64,
}

impl Default for MonitoringSettings {
    fn default() -> Self {
        Self {
            v_grid: vec![1.0 / 3.0, 2.0 / 3.0, 1.0],
            alpha: 0.05,
            spending: Spending::ObrienFlemingType,
            sidedness: Sidedness::Two,
            null_beta: 0.0,
        }
    }
}

impl MonitoringSettings {
    pub fn plan(&self) -> Result<MonitoringPlan> {
        MonitoringPlan::new(self.v_grid.clone(), self.alpha, self.spending, self.sidedness)
    }
}

/// Replicate settings for `validate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSettings {
    pub replicates: usize,
    pub v_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub reference_beta: f64,
    pub oracle_checks: bool,
    pub estimate_final: bool,
    pub fraction_grid: Vec<f64>,
    pub monitor: bool,
    pub null_beta: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        Self {
            replicates: 2000,
            v_grid: vec![0.25, 0.5, 0.75, 1.0],
            t_grid: Vec::new(),
            theta_grid: Vec::new(),
            reference_beta: 0.0,
            oracle_checks: false,
            estimate_final: false,
            fraction_grid: Vec::new(),
            monitor: false,
            null_beta: 0.0,
        }
    }
}

impl ValidationSettings {
    pub fn plan(&self, monitoring: &MonitoringSettings) -> Result<ValidationPlan> {
        let plan = ValidationPlan {
            replicates: self.replicates,
            v_grid: self.v_grid.clone(),
            t_grid: self.t_grid.clone(),
            theta_grid: self.theta_grid.clone(),
            oracle_checks: self.oracle_checks,
            estimate_final: self.estimate_final,
            fraction_grid: self.fraction_grid.clone(),
            reference_beta: self.reference_beta,
            monitoring: if self.monitor { Some(monitoring.plan()?) } else { None },
            null_beta: self.null_beta,
            mple: MpleOptions::default(),
        };
        plan.validate()?;
        Ok(plan)
    }
}

/// A parsed and validated configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub design: DesignConfig,
    pub monitoring: MonitoringSettings,
    pub validation: ValidationSettings,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Section<'a> {
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &str, allowed: &[&str]) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::validation(name, "must be a section")),
        };
        if let Some(t) = table {
            if let Some(k) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(Error::validation(k.as_str(), format!("unknown key in [{name}]")));
            }
        }
        Ok(Self { table })
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.get(key).map(|v| as_float(key, v)).transpose()
    }

    fn float_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.float(key)?.unwrap_or(default))
    }

    fn require_float(&self, key: &str) -> Result<f64> {
        self.float(key)?.ok_or_else(|| Error::validation(key, "is required"))
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(Error::validation(key, "must be a nonnegative integer")),
        }
    }

    fn string(&self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(Error::validation(key, "must be a string")),
        }
    }

    fn boolean(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(Error::validation(key, "must be true or false")),
        }
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items.iter().map(|v| as_float(key, v)).collect::<Result<_>>().map(Some),
            Some(v) => Ok(Some(vec![as_float(key, v)?])),
        }
    }

    /// A list of covariate vectors: `[0.0, 1.0]` (scalar per arm) or
    /// `[[0.0, 1.0], [1.0, 0.0]]`.
    fn vectors(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|item| match item {
                    Value::Array(inner) => inner.iter().map(|v| as_float(key, v)).collect(),
                    v => Ok(vec![as_float(key, v)?]),
                })
                .collect::<Result<_>>()
                .map(Some),
            Some(_) => Err(Error::validation(key, "must be an array")),
        }
    }
}

fn as_float(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::validation(key, "must be a number")),
    }
}

fn monitoring_settings(monitoring: &Section) -> Result<MonitoringSettings> {
    let mut mon = MonitoringSettings::default();
    match (monitoring.floats("v_grid")?, monitoring.uint("looks")?) {
        (Some(_), Some(_)) => return Err(Error::validation("looks", "give either v_grid or looks")),
        (Some(grid), None) => mon.v_grid = grid,
        (None, Some(k)) if k >= 1 => mon.v_grid = (1..=k).map(|i| i as f64 / k as f64).collect(),
        (None, Some(_)) => return Err(Error::validation("looks", "must be at least 1")),
        (None, None) => {}
    }
    mon.alpha = monitoring.float_or("alpha", mon.alpha)?;
    if let Some(s) = monitoring.string("spending")? {
        mon.spending = Spending::parse(s).ok_or_else(|| Error::validation("spending", format!("unknown `{s}`")))?;
    }
    if let Some(s) = monitoring.string("sidedness")? {
        mon.sidedness = Sidedness::parse(s).ok_or_else(|| Error::validation("sidedness", format!("unknown `{s}`")))?;
    }
    mon.null_beta = monitoring.float_or("null_beta", 0.0)?;
    MonitoringPlan {
        v_grid: mon.v_grid.clone(),
        alpha: mon.alpha,
        spending: mon.spending,
        sidedness: mon.sidedness,
        boundaries: Vec::new(),
    }
    .validate()?;
    Ok(mon)
}

/// Monitoring settings from a plan document. Only `[monitoring]` is read;
/// the other sections may be present (a full run configuration is a valid
/// plan) but are not validated.
pub fn parse_plan(text: &str) -> Result<MonitoringSettings> {
    let root: Table = parse_table(text)?;
    if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(Error::validation(k.as_str(), "unknown section"));
    }
    monitoring_settings(&Section::new(&root, "monitoring", &MONITORING_KEYS)?)
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse().map_err(|e: toml::de::Error| Error::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let root = parse_table(text)?;
    if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
        return Err(Error::validation(k.as_str(), "unknown section"));
    }
    let design = Section::new(&root, "design", &DESIGN_KEYS)?;
    let hazard = Section::new(&root, "hazard", &HAZARD_KEYS)?;
    let allocation = Section::new(&root, "allocation", &ALLOCATION_KEYS)?;
    let monitoring = Section::new(&root, "monitoring", &MONITORING_KEYS)?;
    let validation = Section::new(&root, "validation", &VALIDATION_KEYS)?;

    let n = design
        .uint("target_enrollment")?
        .ok_or_else(|| Error::validation("target_enrollment", "is required"))? as usize;
    let horizon = design.require_float("horizon")?;
    let entry_process = match design.string("entry_process")?.unwrap_or("poisson") {
        "poisson" => EntryProcess::Poisson {
            rate: design.require_float("entry_rate")?,
        },
        "fixed_schedule" => EntryProcess::FixedSchedule(
            design
                .floats("entry_schedule")?
                .ok_or_else(|| Error::validation("entry_schedule", "is required for a fixed schedule"))?,
        ),
        other => return Err(Error::validation("entry_process", format!("unknown process `{other}`"))),
    };

    let rates = hazard
        .floats("rates")?
        .ok_or_else(|| Error::validation("rates", "is required"))?;
    let hazard_spec = HazardSpec::new(
        hazard.floats("cut_points")?.unwrap_or_default(),
        rates,
        hazard.float_or("censor_rate", 0.0)?,
        horizon,
    )?;

    let mut covariates = ArmCovariates::binary();
    if let Some(codes) = design.vectors("arm_codes")? {
        covariates.codes = codes;
    }
    match (design.float("switch_time")?, design.vectors("switch_codes")?) {
        (Some(at), Some(later)) => covariates.switch = Some((at, later)),
        (None, None) => {}
        (None, Some(_)) => return Err(Error::validation("switch_time", "is required with switch_codes")),
        (Some(_), None) => return Err(Error::validation("switch_codes", "is required with switch_time")),
    }
    let beta0 = design.floats("beta0")?.unwrap_or_else(|| vec![0.0; covariates.dim()]);

    let window = allocation.float_or("response_window", 1.0)?;
    let arms = covariates.arms();
    let policy = match allocation.string("policy")?.unwrap_or("rpw") {
        "rpw" => {
            let initial = allocation.uint("initial_balls_per_arm")?.unwrap_or(1);
            let rule = match allocation.string("response_rule")?.unwrap_or("survival_past_window") {
                "survival_past_window" => ResponseRule::SurvivalPastWindow,
                "event_before_window" => ResponseRule::EventBeforeWindow,
                other => return Err(Error::validation("response_rule", format!("unknown rule `{other}`"))),
            };
            AllocationKind::RandomizedPlayTheWinner {
                initial_balls: vec![initial; arms],
                balls_added: allocation.uint("balls_added")?.unwrap_or(1),
                response_window: window,
                rule,
            }
        }
        "complete" => AllocationKind::CompleteRandomization {
            p: allocation.float_or("p", 0.5)?,
        },
        "alternation" => AllocationKind::DeterministicAlternation,
        "peek" => AllocationKind::FuturePeek { window },
        other => return Err(Error::validation("policy", format!("unknown policy `{other}`"))),
    };

    let mut cfg = DesignConfig::new(
        n,
        entry_process,
        policy,
        hazard_spec,
        covariates,
        beta0,
        design.uint("seed")?.unwrap_or(0),
    );
    cfg.planned_information = design.float_or("planned_information", n as f64)?;
    cfg.v_bar = design.float_or("v_bar", MAX_INFORMATION_FRACTION)?;
    cfg.covariate_bound = design.float_or("covariate_bound", cfg.covariate_bound)?;
    cfg.validate()?;

    let mon = monitoring_settings(&monitoring)?;
    if mon.v_grid.last().is_some_and(|&v| v > cfg.v_bar) {
        return Err(Error::validation("v_grid", "looks must not exceed v_bar"));
    }

    let defaults = ValidationSettings::default();
    let val = ValidationSettings {
        replicates: validation
            .uint("replicates")?
            .map_or(defaults.replicates, |r| r as usize),
        v_grid: validation.floats("v_grid")?.unwrap_or(defaults.v_grid),
        t_grid: validation.floats("t_grid")?.unwrap_or_default(),
        theta_grid: validation.floats("theta_grid")?.unwrap_or_default(),
        reference_beta: validation.float_or("reference_beta", mon.null_beta)?,
        oracle_checks: validation.boolean("oracle_checks", defaults.oracle_checks)?,
        estimate_final: validation.boolean("estimate_final", defaults.estimate_final)?,
        fraction_grid: validation.floats("fraction_grid")?.unwrap_or_default(),
        monitor: validation.boolean("monitor", defaults.monitor)?,
        null_beta: validation.float_or("null_beta", mon.null_beta)?,
    };
    if val.v_grid.iter().chain(&val.fraction_grid).any(|&v| v > cfg.v_bar) {
        return Err(Error::validation("v_grid", "fractions must not exceed v_bar"));
    }

    Ok(RunConfig {
        design: cfg,
        monitoring: mon,
        validation: val,
    })
}
