use rand::Rng;

use crate::error::{Error, Result};
use crate::trial_core::Subject;

/// Which interim outcome counts as a success for play-the-winner updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResponseRule {
    /// Still under follow-up (no event, not censored) at `response_window`.
    #[default]
    SurvivalPastWindow,
    /// Event observed within `response_window`.
    EventBeforeWindow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AllocationKind {
    /// Arm 0 with probability `p`, otherwise uniform over the remaining arms.
    CompleteRandomization {
        p: f64,
    },
    /// Randomized play-the-winner urn. A success on arm `a` adds
    /// `balls_added` balls of type `a`; a failure adds `balls_added` balls of
    /// every other type.
    RandomizedPlayTheWinner {
        initial_balls: Vec<u64>,
        balls_added: u64,
        response_window: f64,
        rule: ResponseRule,
    },
    DeterministicAlternation,
    /// Negative control that breaks Condition A: the entering subject goes
    /// to arm 1 when its own latent event time (under the arm-0 covariate
    /// path) is an event within `window`, otherwise to arm 0. The simulator
    /// feeds it information from the future.
    FuturePeek {
        window: f64,
    },
}

impl AllocationKind {
    pub fn rpw(initial: u64, added: u64, window: f64) -> Self {
        AllocationKind::RandomizedPlayTheWinner {
            initial_balls: vec![initial, initial],
            balls_added: added,
            response_window: window,
            rule: ResponseRule::default(),
        }
    }

    pub fn validate(&self, arms: usize) -> Result<()> {
        match self {
            AllocationKind::CompleteRandomization { p } => {
                if !(*p >= 0.0 && *p <= 1.0) {
                    return Err(Error::validation("p", "must lie in [0, 1]"));
                }
            }
            AllocationKind::RandomizedPlayTheWinner {
                initial_balls,
                response_window,
                ..
            } => {
                if initial_balls.len() != arms {
                    return Err(Error::validation(
                        "initial_balls_per_arm",
                        format!("expected {arms} entries, got {}", initial_balls.len()),
                    ));
                }
                if initial_balls.iter().any(|&b| b < 1) {
                    return Err(Error::validation(
                        "initial_balls_per_arm",
                        "every arm needs at least one ball",
                    ));
                }
                if !(*response_window > 0.0) || !response_window.is_finite() {
                    return Err(Error::validation("response_window", "must be positive and finite"));
                }
            }
            AllocationKind::DeterministicAlternation => {}
            AllocationKind::FuturePeek { window } => {
                if !(*window > 0.0) {
                    return Err(Error::validation("response_window", "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Interim response of an enrolled subject under this policy, if the
    /// policy uses responses at all.
    pub fn response_of(&self, index: usize, subject: &Subject) -> Option<Response> {
        match self {
            AllocationKind::RandomizedPlayTheWinner {
                response_window, rule, ..
            } => interim_response(index, subject, *response_window, *rule),
            _ => None,
        }
    }
}

/// An interim outcome and the calendar time at which it became known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub subject: usize,
    pub arm: usize,
    pub observed_at: f64,
    pub success: bool,
}

/// Interim response of `subject` given a response window. Subjects censored
/// before the window never produce a response.
pub fn interim_response(index: usize, subject: &Subject, window: f64, rule: ResponseRule) -> Option<Response> {
    let within = subject.observed_time <= window;
    let (observed_at, event_within) = if within {
        if !subject.event {
            return None;
        }
        (subject.entry_time + subject.observed_time, true)
    } else {
        (subject.entry_time + window, false)
    };
    let success = match rule {
        ResponseRule::SurvivalPastWindow => !event_within,
        ResponseRule::EventBeforeWindow => event_within,
    };
    Some(Response {
        subject: index,
        arm: subject.arm,
        observed_at,
        success,
    })
}

/// Outcome of one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationDraw {
    pub arm: usize,
    /// Uniform variate consumed by the draw (none for deterministic rules).
    pub uniform: Option<f64>,
    /// Urn composition used for the draw (empty for non-urn policies).
    pub urn: Vec<u64>,
    /// Responses `(subject, observed_at)` incorporated at this allocation.
    pub incorporated: Vec<(usize, f64)>,
}

/// A not-yet-observed outcome revealed to [`AllocationKind::FuturePeek`]:
/// the entering subject's own latent event time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeekedEvent {
    pub subject: usize,
    pub completion_time: f64,
    pub event: bool,
}

/// Allocation rule plus its mutable state.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationPolicy {
    kind: AllocationKind,
    arms: usize,
    urn: Vec<u64>,
    seen: Vec<bool>,
    allocated: usize,
}

impl AllocationPolicy {
    pub fn new(kind: AllocationKind, arms: usize) -> Result<Self> {
        kind.validate(arms)?;
        let urn = match &kind {
            AllocationKind::RandomizedPlayTheWinner { initial_balls, .. } => initial_balls.clone(),
            _ => Vec::new(),
        };
        Ok(Self {
            kind,
            arms,
            urn,
            seen: Vec::new(),
            allocated: 0,
        })
    }

    pub fn kind(&self) -> &AllocationKind {
        &self.kind
    }

    pub fn urn(&self) -> &[u64] {
        &self.urn
    }

    /// Allocate the subject entering at `entry_time`.
    ///
    /// `history` holds the responses known so far; every one of them must have
    /// been observed strictly before `entry_time`. Responses not seen at an
    /// earlier call update the urn before the draw.
    pub fn allocate_next<R: Rng + ?Sized>(
        &mut self,
        entry_time: f64,
        history: &[Response],
        rng: &mut R,
    ) -> Result<AllocationDraw> {
        if let Some(r) = history.iter().find(|r| !(r.observed_at < entry_time)) {
            return Err(Error::ConditionAViolation {
                subject: r.subject,
                observed_at: r.observed_at,
                entry_time,
            });
        }
        let mut incorporated = Vec::new();
        if let AllocationKind::RandomizedPlayTheWinner { balls_added, .. } = self.kind {
            for r in history {
                if self.seen.len() <= r.subject {
                    self.seen.resize(r.subject + 1, false);
                }
                if self.seen[r.subject] {
                    continue;
                }
                self.seen[r.subject] = true;
                incorporated.push((r.subject, r.observed_at));
                if r.success {
                    self.urn[r.arm] += balls_added;
                } else {
                    for (a, balls) in self.urn.iter_mut().enumerate() {
                        if a != r.arm {
                            *balls += balls_added;
                        }
                    }
                }
            }
        }

        let draw = match &self.kind {
            AllocationKind::CompleteRandomization { p } => {
                let u: f64 = rng.random();
                let arm = if u < *p {
                    0
                } else if self.arms == 2 {
                    1
                } else {
                    let rest = (u - p) / (1.0 - p);
                    1 + ((rest * (self.arms - 1) as f64) as usize).min(self.arms - 2)
                };
                AllocationDraw {
                    arm,
                    uniform: Some(u),
                    urn: Vec::new(),
                    incorporated,
                }
            }
            AllocationKind::RandomizedPlayTheWinner { .. } => {
                let u: f64 = rng.random();
                let total: u64 = self.urn.iter().sum();
                let target = u * total as f64;
                let mut cum = 0.0;
                let mut arm = self.arms - 1;
                for (a, &balls) in self.urn.iter().enumerate() {
                    cum += balls as f64;
                    if target < cum {
                        arm = a;
                        break;
                    }
                }
                AllocationDraw {
                    arm,
                    uniform: Some(u),
                    urn: self.urn.clone(),
                    incorporated,
                }
            }
            AllocationKind::DeterministicAlternation => AllocationDraw {
                arm: self.allocated % self.arms,
                uniform: None,
                urn: Vec::new(),
                incorporated,
            },
            AllocationKind::FuturePeek { .. } => {
                return Err(Error::InvalidArgument(
                    "the future-peeking control policy must be driven through allocate_with_peek".into(),
                ))
            }
        };
        self.allocated += 1;
        Ok(draw)
    }

    /// Allocation for the [`AllocationKind::FuturePeek`] control: arm 1 when
    /// the peeked outcome is an event within the window after entry.
    pub fn allocate_with_peek(&mut self, entry_time: f64, peeked: Option<PeekedEvent>) -> Result<AllocationDraw> {
        let AllocationKind::FuturePeek { window } = self.kind else {
            return Err(Error::InvalidArgument(
                "allocate_with_peek needs the FuturePeek policy".into(),
            ));
        };
        let arm = match peeked {
            Some(p) if p.event && p.completion_time - entry_time <= window => 1,
            _ => 0,
        };
        self.allocated += 1;
        Ok(AllocationDraw {
            arm,
            uniform: None,
            urn: Vec::new(),
            incorporated: peeked.map(|p| vec![(p.subject, p.completion_time)]).unwrap_or_default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};
    use crate::trial_core::CovariatePath;

    fn frequency_of_arm0(policy: &AllocationPolicy, history: &[Response], draws: usize) -> f64 {
        let mut rng = stream(11, Purpose::Allocation, 0);
        let mut hits = 0;
        for _ in 0..draws {
            let mut p = policy.clone();
            if p.allocate_next(10.0, history, &mut rng).unwrap().arm == 0 {
                hits += 1;
            }
        }
        hits as f64 / draws as f64
    }

    #[test]
    fn symmetric_urn_is_fair() {
        let policy = AllocationPolicy::new(AllocationKind::rpw(1, 1, 1.0), 2).unwrap();
        let f = frequency_of_arm0(&policy, &[], 100_000);
        assert!((f - 0.5).abs() < 0.005, "{f}");
    }

    #[test]
    fn success_reinforces_its_arm() {
        let policy = AllocationPolicy::new(AllocationKind::rpw(1, 1, 1.0), 2).unwrap();
        let history = [Response {
            subject: 0,
            arm: 0,
            observed_at: 1.0,
            success: true,
        }];
        let mut p = policy.clone();
        let mut rng = stream(1, Purpose::Allocation, 0);
        let draw = p.allocate_next(2.0, &history, &mut rng).unwrap();
        assert_eq!(draw.urn, vec![2, 1]);
        let f = frequency_of_arm0(&policy, &history, 100_000);
        assert!((f - 2.0 / 3.0).abs() < 0.005, "{f}");
    }

    #[test]
    fn failure_reinforces_other_arm() {
        let mut p = AllocationPolicy::new(AllocationKind::rpw(1, 2, 1.0), 2).unwrap();
        let history = [Response {
            subject: 0,
            arm: 0,
            observed_at: 1.0,
            success: false,
        }];
        let mut rng = stream(1, Purpose::Allocation, 0);
        assert_eq!(p.allocate_next(2.0, &history, &mut rng).unwrap().urn, vec![1, 3]);
        // already incorporated responses are not counted twice
        let draw = p.allocate_next(3.0, &history, &mut rng).unwrap();
        assert_eq!(draw.urn, vec![1, 3]);
        assert!(draw.incorporated.is_empty());
    }

    #[test]
    fn complete_randomization_frequency() {
        let policy = AllocationPolicy::new(AllocationKind::CompleteRandomization { p: 0.3 }, 2).unwrap();
        let f = frequency_of_arm0(&policy, &[], 100_000);
        assert!((f - 0.3).abs() < 0.005, "{f}");
    }

    #[test]
    fn future_history_is_rejected() {
        let mut p = AllocationPolicy::new(AllocationKind::rpw(1, 1, 1.0), 2).unwrap();
        let history = [Response {
            subject: 3,
            arm: 1,
            observed_at: 2.0,
            success: true,
        }];
        let mut rng = stream(1, Purpose::Allocation, 0);
        // completion at exactly the entry time is not strictly prior
        let err = p.allocate_next(2.0, &history, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ConditionAViolation { subject: 3, .. }));
    }

    #[test]
    fn alternation_cycles_arms() {
        let mut p = AllocationPolicy::new(AllocationKind::DeterministicAlternation, 2).unwrap();
        let mut rng = stream(1, Purpose::Allocation, 0);
        let arms: Vec<usize> = (0..4)
            .map(|i| p.allocate_next(i as f64, &[], &mut rng).unwrap().arm)
            .collect();
        assert_eq!(arms, vec![0, 1, 0, 1]);
    }

    #[test]
    fn interim_response_rules() {
        let s = |t: f64, e: bool| Subject::observed(1.0, CovariatePath::constant(&[0.0]), 1, t, e).unwrap();
        let r = interim_response(0, &s(0.5, true), 1.0, ResponseRule::SurvivalPastWindow).unwrap();
        assert_eq!((r.observed_at, r.success), (1.5, false));
        let r = interim_response(0, &s(3.0, true), 1.0, ResponseRule::SurvivalPastWindow).unwrap();
        assert_eq!((r.observed_at, r.success), (2.0, true));
        assert!(interim_response(0, &s(0.5, false), 1.0, ResponseRule::SurvivalPastWindow).is_none());
        let r = interim_response(0, &s(0.5, true), 1.0, ResponseRule::EventBeforeWindow).unwrap();
        assert!(r.success);
    }
}
