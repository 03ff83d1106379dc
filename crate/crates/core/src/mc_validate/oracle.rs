//! Brute-force reference for the score: a plain double loop over events and
//! subjects that shares no code with the engine.

use crate::cox_engine::ScoreVariant;
use crate::error::{Error, Result};
use crate::trial_core::{Subject, TrialData};

/// Covariate value at `w` found by scanning the jump times from the start.
fn value_at(subject: &Subject, w: f64) -> Vec<f64> {
    let path = &subject.covariates;
    let mut k = 0;
    for (i, &jump) in path.jump_times().iter().enumerate() {
        if jump <= w {
            k = i;
        }
    }
    path.segment_value(k).to_vec()
}

/// `U(β; t, ϑ)` by direct enumeration. Every event is checked against every
/// subject; no ordering of the input is assumed.
pub fn oracle_score(data: &TrialData, beta: &[f64], t: f64, theta: f64, variant: ScoreVariant) -> Result<Vec<f64>> {
    let d = data.dim();
    if beta.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: beta.len(),
        });
    }
    if theta > t {
        return Err(Error::InvalidArgument(format!(
            "theta ({theta}) must not exceed t ({t})"
        )));
    }
    let mut total = vec![0.0; d];
    for event in data.subjects() {
        let counted = event.event && event.entry_time <= theta && event.entry_time + event.observed_time <= t;
        if !counted {
            continue;
        }
        let w = event.observed_time;
        let mut weight = 0.0;
        let mut weighted = vec![0.0; d];
        for other in data.subjects() {
            let entered = match variant {
                ScoreVariant::FullRiskset => other.entry_time + w <= t,
                ScoreVariant::SubsampleRiskset => other.entry_time <= theta && other.entry_time + w <= t,
            };
            if !entered || other.observed_time < w {
                continue;
            }
            let z = value_at(other, w);
            let e = beta.iter().zip(&z).map(|(b, x)| b * x).sum::<f64>().exp();
            weight += e;
            for p in 0..d {
                weighted[p] += e * z[p];
            }
        }
        if weight <= 0.0 {
            return Err(Error::EmptyRiskSet { t, w });
        }
        let z = value_at(event, w);
        for p in 0..d {
            total[p] += z[p] - weighted[p] / weight;
        }
    }
    Ok(total)
}
