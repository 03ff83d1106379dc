//! Trial generation: staggered entry, outcome-adaptive allocation that only
//! sees strictly earlier responses, Cox-model event times and censoring.

mod policy;
mod sampling;

pub use policy::{
    interim_response, AllocationDraw, AllocationKind, AllocationPolicy, PeekedEvent, Response, ResponseRule,
};
pub use sampling::{cumulative_hazard, inverse_cumulative_hazard, sample_event_time};

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::trial_core::{DesignConfig, EntryProcess, Subject, TrialData};

/// Audit record of one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationRecord {
    pub subject: usize,
    pub entry_time: f64,
    pub arm: usize,
    pub uniform: Option<f64>,
    pub urn: Vec<u64>,
    /// `(subject, calendar time)` of every outcome the policy consumed here.
    pub referenced: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub trial: TrialData,
    pub allocation_log: Vec<AllocationRecord>,
}

impl SimOutcome {
    /// Every outcome referenced by allocation `i` completed strictly before
    /// `U_i`. Returns the first offending record otherwise.
    pub fn audit_condition_a(&self) -> Result<()> {
        for rec in &self.allocation_log {
            if let Some(&(subject, at)) = rec.referenced.iter().find(|(_, at)| !(*at < rec.entry_time)) {
                return Err(Error::ConditionAViolation {
                    subject,
                    observed_at: at,
                    entry_time: rec.entry_time,
                });
            }
        }
        Ok(())
    }

    /// Fraction of subjects allocated to `arm`.
    pub fn arm_fraction(&self, arm: usize) -> f64 {
        let n = self.allocation_log.len();
        if n == 0 {
            return f64::NAN;
        }
        self.allocation_log.iter().filter(|r| r.arm == arm).count() as f64 / n as f64
    }
}

/// `n` strictly increasing calendar entry times in `[0, τ)`.
pub fn generate_entry_times<R: Rng + ?Sized>(config: &DesignConfig, rng: &mut R) -> Result<Vec<f64>> {
    let n = config.target_enrollment;
    let horizon = config.horizon();
    let times = match &config.entry_process {
        EntryProcess::Poisson { rate } => {
            if !(*rate > 0.0) {
                return Err(Error::validation("entry_rate", "must be positive"));
            }
            let mut t = 0.0;
            (0..n)
                .map(|_| {
                    let gap: f64 = rng.sample(Exp1);
                    t += gap / rate;
                    t
                })
                .collect::<Vec<_>>()
        }
        EntryProcess::FixedSchedule(times) => {
            if times.len() < n {
                return Err(Error::validation(
                    "entry_schedule",
                    format!("{} times given for {n} subjects", times.len()),
                ));
            }
            times[..n].to_vec()
        }
    };
    for (i, w) in times.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(Error::EntryTimeTie {
                index: i + 1,
                previous: w[0],
                current: w[1],
            });
        }
    }
    if let Some(&first) = times.first() {
        if !(first >= 0.0) {
            return Err(Error::validation("entry_schedule", "entry times must be nonnegative"));
        }
    }
    if let Some(&last) = times.last() {
        if !(last < horizon) {
            return Err(Error::ScheduleExceedsHorizon { time: last, horizon });
        }
    }
    Ok(times)
}

/// Simulate one trial. Deterministic given `config.seed`.
pub fn simulate_trial(config: &DesignConfig) -> Result<SimOutcome> {
    config.validate_for_simulation()?;
    let seed = config.seed;
    let horizon = config.horizon();
    let entries = generate_entry_times(config, &mut stream(seed, Purpose::Entry, 0))?;
    let mut policy = AllocationPolicy::new(config.allocation.clone(), config.covariates.arms())?;
    let peeking = matches!(config.allocation, AllocationKind::FuturePeek { .. });

    let mut subjects: Vec<Subject> = Vec::with_capacity(entries.len());
    let mut log = Vec::with_capacity(entries.len());
    let mut pending: Vec<Response> = Vec::new();
    let mut history: Vec<Response> = Vec::new();

    for (i, &u) in entries.iter().enumerate() {
        let mut alloc_rng = stream(seed, Purpose::Allocation, i as u64);
        let unit_exp: f64 = stream(seed, Purpose::Event, i as u64).sample(Exp1);
        let draw = if peeking {
            let baseline =
                inverse_cumulative_hazard(&config.hazard, &config.beta0, &config.covariates.path_for(0), unit_exp);
            policy.allocate_with_peek(
                u,
                Some(PeekedEvent {
                    subject: i,
                    completion_time: u + baseline,
                    event: baseline <= horizon - u,
                }),
            )?
        } else {
            let (known, still_pending): (Vec<Response>, Vec<Response>) =
                pending.drain(..).partition(|r| r.observed_at < u);
            pending = still_pending;
            history.extend(known);
            policy.allocate_next(u, &history, &mut alloc_rng)?
        };

        let path = config.covariates.path_for(draw.arm);
        let latent_event = inverse_cumulative_hazard(&config.hazard, &config.beta0, &path, unit_exp);
        let random_censor = if config.hazard.censor_rate > 0.0 {
            let e: f64 = stream(seed, Purpose::Censor, i as u64).sample(Exp1);
            e / config.hazard.censor_rate
        } else {
            f64::INFINITY
        };
        let latent_censor = random_censor.min(horizon - u);
        let subject = Subject::from_latent(u, path, draw.arm, latent_event, latent_censor)?;
        if let Some(r) = config.allocation.response_of(i, &subject) {
            pending.push(r);
        }
        log.push(AllocationRecord {
            subject: i,
            entry_time: u,
            arm: draw.arm,
            uniform: draw.uniform,
            urn: draw.urn,
            referenced: draw.incorporated,
        });
        subjects.push(subject);
    }

    let trial = TrialData::new(subjects, horizon)?.with_truth(config.beta0.clone(), config.hazard.clone());
    Ok(SimOutcome {
        trial,
        allocation_log: log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trial_core::{ArmCovariates, HazardSpec};

    fn design(n: usize, allocation: AllocationKind, seed: u64) -> DesignConfig {
        DesignConfig::new(
            n,
            EntryProcess::Poisson { rate: 50.0 },
            allocation,
            HazardSpec::constant(1.0, 0.2, 20.0).unwrap(),
            ArmCovariates::binary(),
            vec![0.5],
            seed,
        )
    }

    #[test]
    fn fixed_schedule_passes_through() {
        let mut cfg = design(3, AllocationKind::DeterministicAlternation, 1);
        cfg.entry_process = EntryProcess::FixedSchedule(vec![1.0, 2.0, 3.0]);
        let mut rng = stream(1, Purpose::Entry, 0);
        assert_eq!(generate_entry_times(&cfg, &mut rng).unwrap(), vec![1.0, 2.0, 3.0]);
        cfg.entry_process = EntryProcess::FixedSchedule(vec![1.0, 1.0, 2.0]);
        assert!(matches!(
            generate_entry_times(&cfg, &mut rng),
            Err(Error::EntryTimeTie { .. })
        ));
        cfg.entry_process = EntryProcess::FixedSchedule(vec![1.0, 2.0, 30.0]);
        assert!(matches!(
            generate_entry_times(&cfg, &mut rng),
            Err(Error::ScheduleExceedsHorizon { .. })
        ));
    }

    #[test]
    fn single_subject_uses_initial_state() {
        let out = simulate_trial(&design(1, AllocationKind::rpw(1, 1, 0.5), 9)).unwrap();
        assert_eq!(out.trial.len(), 1);
        assert_eq!(out.allocation_log[0].urn, vec![1, 1]);
        assert!(out.allocation_log[0].referenced.is_empty());
    }

    #[test]
    fn same_seed_same_outcome() {
        let cfg = design(80, AllocationKind::rpw(1, 1, 0.5), 42);
        assert_eq!(simulate_trial(&cfg).unwrap(), simulate_trial(&cfg).unwrap());
        let other = design(80, AllocationKind::rpw(1, 1, 0.5), 43);
        assert_ne!(simulate_trial(&cfg).unwrap(), simulate_trial(&other).unwrap());
    }

    #[test]
    fn rpw_log_respects_condition_a() {
        for seed in 0..20 {
            let out = simulate_trial(&design(150, AllocationKind::rpw(1, 1, 0.3), seed)).unwrap();
            out.audit_condition_a().unwrap();
            assert_eq!(out.allocation_log.len(), out.trial.len());
            let total: usize = out.allocation_log.iter().map(|r| r.referenced.len()).sum();
            assert!(total > 0);
        }
    }

    #[test]
    fn peeking_control_fails_the_audit() {
        let out = simulate_trial(&design(150, AllocationKind::FuturePeek { window: 0.5 }, 3)).unwrap();
        assert!(matches!(
            out.audit_condition_a(),
            Err(Error::ConditionAViolation { .. })
        ));
    }

    #[test]
    fn administrative_censoring_stops_at_horizon() {
        let mut cfg = design(200, AllocationKind::CompleteRandomization { p: 0.5 }, 5);
        cfg.hazard = HazardSpec::constant(0.05, 0.0, 5.0).unwrap();
        let out = simulate_trial(&cfg).unwrap();
        for s in out.trial.subjects() {
            assert!(s.completion_time() <= 5.0 + 1e-12);
            let lat = s.latent.unwrap();
            assert_eq!(s.observed_time, lat.event.min(lat.censor));
        }
    }
}
