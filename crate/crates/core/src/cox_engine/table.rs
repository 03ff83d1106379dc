use crate::error::{Error, Result};
use crate::trial_core::TrialData;

use super::{check_beta, finish, RiskSums, ScoreAccum, ScoreEvaluation, ScoreVariant};

struct EventRow {
    subject: usize,
    w: f64,
    completion: f64,
}

/// Event-sorted evaluation of `U(β; t, ϑ)` for many `(t, ϑ)` queries at a
/// fixed β.
///
/// For every event `i` the table stores prefix sums over subjects in entry
/// order of `exp(β'Z_j(w_i)) 1(T̃_j >= w_i)` (and its first and second
/// moments). The risk set of any query is an entry-order prefix, found by
/// binary search, so one query costs `O(events · log n)` instead of
/// `O(events · n)`. Prefix sums add exactly the same terms in the same
/// order as [`super::score`], so results agree bit for bit.
pub struct EventRiskTable<'a> {
    data: &'a TrialData,
    beta: Vec<f64>,
    d: usize,
    n: usize,
    events: Vec<EventRow>,
    p0: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl<'a> EventRiskTable<'a> {
    pub fn new(data: &'a TrialData, beta: &[f64]) -> Result<Self> {
        check_beta(data, beta)?;
        let d = data.dim();
        let n = data.len();
        let events: Vec<EventRow> = data
            .subjects()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.event)
            .map(|(i, s)| EventRow {
                subject: i,
                w: s.observed_time,
                completion: s.completion_time(),
            })
            .collect();
        let m = events.len();
        let mut p0 = vec![0.0; m * (n + 1)];
        let mut p1 = vec![0.0; m * (n + 1) * d];
        let mut p2 = vec![0.0; m * (n + 1) * d * d];
        for (k, ev) in events.iter().enumerate() {
            let mut sums = RiskSums::new(d);
            let base = k * (n + 1);
            for (j, s) in data.subjects().iter().enumerate() {
                if s.observed_time >= ev.w {
                    sums.add(beta, s.z(ev.w));
                }
                let row = base + j + 1;
                p0[row] = sums.s0;
                p1[row * d..(row + 1) * d].copy_from_slice(&sums.s1);
                p2[row * d * d..(row + 1) * d * d].copy_from_slice(&sums.s2);
            }
        }
        Ok(Self {
            data,
            beta: beta.to_vec(),
            d,
            n,
            events,
            p0,
            p1,
            p2,
        })
    }

    pub fn data(&self) -> &TrialData {
        self.data
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Same contract as [`super::score`] (without the tie count).
    pub fn evaluate(&self, t: f64, theta: f64, variant: ScoreVariant) -> Result<ScoreEvaluation> {
        if !(theta <= t) {
            return Err(Error::InvalidArgument(format!(
                "theta ({theta}) must not exceed t ({t})"
            )));
        }
        let cap = variant.entry_cap(theta);
        let subjects = self.data.subjects();
        let (d, n) = (self.d, self.n);
        let mut acc = ScoreAccum::new(d);
        for (k, ev) in self.events.iter().enumerate() {
            let s = &subjects[ev.subject];
            if s.entry_time > theta {
                break;
            }
            if !(ev.completion <= t) {
                continue;
            }
            let w = ev.w;
            let m = subjects.partition_point(|x| x.entry_time <= cap && x.entry_time + w <= t);
            let row = k * (n + 1) + m;
            let s0 = self.p0[row];
            if !(s0 > 0.0) {
                return Err(Error::EmptyRiskSet { t, w });
            }
            acc.add_event(
                &self.beta,
                s.z(w),
                s0,
                &self.p1[row * d..(row + 1) * d],
                &self.p2[row * d * d..(row + 1) * d * d],
            );
        }
        Ok(finish(&self.beta, t, theta, variant, acc, 0))
    }
}
