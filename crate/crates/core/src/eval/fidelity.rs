//! How closely a learner model's likelihoods track a reference explainee
//! across the full likelihood range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::teaching::{Explanation, Learner, TargetInference};

pub const DECILES: usize = 10;
pub const MIN_PER_DECILE: usize = 5;
pub const MAD_FLAG: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecileFidelity {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// Mean absolute difference between learner and reference likelihoods.
    pub mad: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// Pearson correlation; `None` when either side is constant.
    pub correlation: Option<f64>,
    pub mad: f64,
    pub deciles: Vec<DecileFidelity>,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

fn in_unit(v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "fidelity needs likelihoods in [0, 1], got {v}"
        )))
    }
}

/// Compares `learner` with `reference` on `probes`, grouping probes by the
/// decile of the learner's likelihood.
pub fn fidelity_check<L: Learner + ?Sized, R: Learner + ?Sized>(
    learner: &L,
    probes: &[(TargetInference, Explanation)],
    reference: &R,
) -> Result<FidelityReport> {
    let mut ours = Vec::with_capacity(probes.len());
    let mut theirs = Vec::with_capacity(probes.len());
    for (theta, x) in probes {
        ours.push(in_unit(learner.likelihood(theta, x)?)?);
        theirs.push(in_unit(reference.likelihood(theta, x)?)?);
    }
    let mut sums = [(0usize, 0.0); DECILES];
    for (a, b) in ours.iter().zip(&theirs) {
        let d = ((a * DECILES as f64) as usize).min(DECILES - 1);
        sums[d].0 += 1;
        sums[d].1 += (a - b).abs();
    }
    if let Some((decile, &(count, _))) = sums.iter().enumerate().find(|(_, s)| s.0 < MIN_PER_DECILE)
    {
        return Err(Error::InsufficientCoverage {
            decile,
            count,
            required: MIN_PER_DECILE,
        });
    }
    let deciles = sums
        .iter()
        .enumerate()
        .map(|(i, &(count, total))| {
            let mad = total / count as f64;
            DecileFidelity {
                lower: i as f64 / DECILES as f64,
                upper: (i + 1) as f64 / DECILES as f64,
                count,
                mad,
                flagged: mad > MAD_FLAG,
            }
        })
        .collect();
    let mad = ours
        .iter()
        .zip(&theirs)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / ours.len() as f64;
    Ok(FidelityReport {
        correlation: pearson(&ours, &theirs),
        mad,
        deciles,
    })
}
