//! One interface over the ways a teacher can pick an explanation: exact
//! maximization, local search, posterior sampling, and Monte-Carlo
//! expectation over masks.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::SaliencyVector;
use crate::rng;
use crate::teaching::{
    mh_sample, select_max, teacher_posterior, Explanation, ExplanationSpace, Learner, Prior,
    Proposal, SpaceDescriptor, TargetInference,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// Normalize over the whole space and take the argmax.
    ExhaustiveMax,
    /// Best-improvement swap search over subsets.
    Greedy,
    /// Metropolis samples from the teacher posterior.
    MhSample { n: usize, burn_in: usize },
    /// Posterior mean of masks, estimated from `n` prior draws.
    McExpectation { n: usize },
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ExhaustiveMax => "exhaustive-max",
            Strategy::Greedy => "greedy",
            Strategy::MhSample { .. } => "mh-sample",
            Strategy::McExpectation { .. } => "mc-expectation",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StrategyDiagnostics {
    /// Teacher probability of the returned element (exhaustive only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_mass: Option<f64>,
    /// Unnormalized log weight of the returned element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    /// Number of elements scored.
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    /// The chosen element; for sampling, the final draw; for expectations,
    /// a saliency vector.
    pub explanation: Explanation,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Explanation>,
    pub diagnostics: StrategyDiagnostics,
}

fn score<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    x: &Explanation,
) -> Result<f64> {
    let lp = space.prior.log_weight(None, x)?;
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    let ll = learner.log_likelihood(theta, x)?;
    if ll.is_nan() || ll == f64::INFINITY {
        return Err(Error::InvalidLikelihood(ll));
    }
    Ok(ll + lp)
}

fn assemble(pools: &[Vec<usize>], chosen: &[Vec<usize>]) -> Explanation {
    Explanation::ExampleSet(
        chosen
            .iter()
            .zip(pools)
            .flat_map(|(c, p)| c.iter().map(move |&pos| p[pos]))
            .collect(),
    )
}

/// Swap search over per-pool subsets: starting from the first `size`
/// members of every pool, repeatedly applies the single in-pool swap with
/// the largest gain until none improves. Exact when the objective is a sum
/// of per-element scores.
pub fn greedy_subsets<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<(Explanation, f64, u64)> {
    let (pools, size) = match &space.descriptor {
        SpaceDescriptor::Subsets { pool, size } => (vec![pool.clone()], *size),
        SpaceDescriptor::PerClassSubsets { pools, size } => (pools.clone(), *size),
        _ => {
            return Err(Error::StrategySpaceMismatch(
                "greedy search needs a subset space".into(),
            ))
        }
    };
    space.validate()?;
    let mut chosen: Vec<Vec<usize>> = pools.iter().map(|_| (0..size).collect()).collect();
    let mut current = score(learner, theta, space, &assemble(&pools, &chosen))?;
    let mut evaluations = 1u64;
    loop {
        let mut moves = Vec::new();
        for (c, pool) in pools.iter().enumerate() {
            for slot in 0..size {
                for cand in 0..pool.len() {
                    if chosen[c].contains(&cand) {
                        continue;
                    }
                    moves.push((c, slot, cand));
                }
            }
        }
        let scores = moves
            .par_iter()
            .map(|&(c, slot, cand)| {
                let mut next = chosen.clone();
                next[c][slot] = cand;
                next[c].sort_unstable();
                score(learner, theta, space, &assemble(&pools, &next))
            })
            .collect::<Result<Vec<_>>>()?;
        evaluations += moves.len() as u64;
        let mut best: Option<usize> = None;
        for (i, &s) in scores.iter().enumerate() {
            if s > current && best.is_none_or(|b| s > scores[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        let (c, slot, cand) = moves[b];
        chosen[c][slot] = cand;
        chosen[c].sort_unstable();
        current = scores[b];
    }
    if current == f64::NEG_INFINITY {
        return Err(Error::AllZeroMass);
    }
    Ok((assemble(&pools, &chosen), current, evaluations))
}

/// `n` i.i.d. Bernoulli(`keep_prob`) masks; mask `i` is drawn from its own
/// stream so the set does not depend on thread scheduling.
pub fn sample_masks(dim: usize, n: usize, keep_prob: f64, seed: u64) -> Vec<Vec<f64>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            (0..dim)
                .map(|_| {
                    if r.random::<f64>() < keep_prob {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Weighted mean of masks with the delta-method standard error of each
/// coordinate.
pub fn weighted_mask_mean(masks: &[Vec<f64>], weights: &[f64]) -> Result<SaliencyVector> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let dim = masks.first().map(Vec::len).unwrap_or(0);
    let mut mean = vec![0.0; dim];
    for (m, &w) in masks.iter().zip(weights) {
        for (a, v) in mean.iter_mut().zip(m) {
            *a += w * v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= total);
    let mut var = vec![0.0; dim];
    for (m, &w) in masks.iter().zip(weights) {
        for ((a, v), s) in var.iter_mut().zip(m).zip(&mean) {
            *a += w * w * (v - s) * (v - s);
        }
    }
    Ok(SaliencyVector {
        values: mean,
        normalization: Default::default(),
        std_error: Some(var.iter().map(|v| v.sqrt() / total).collect()),
        base_value: None,
    })
}

fn mask_expectation<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    n: usize,
    seed: u64,
) -> Result<SaliencyVector> {
    let SpaceDescriptor::Masks { dim, keep_prob } = space.descriptor else {
        return Err(Error::StrategySpaceMismatch(
            "mc-expectation needs a mask space".into(),
        ));
    };
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mask count must be at least 1".into(),
        ));
    }
    space.validate()?;
    let masks = sample_masks(dim, n, keep_prob, seed);
    // draws come from Bernoulli(keep_prob); reweight only if the prior differs
    let matches_sampler = matches!(space.prior, Prior::MaskBernoulli(p) if p == keep_prob);
    let weights = masks
        .par_iter()
        .map(|m| {
            let x = Explanation::FeatureMask(m.clone());
            let l = learner.likelihood(theta, &x)?;
            if matches_sampler {
                return Ok(l);
            }
            let q: f64 = m
                .iter()
                .map(|&b| if b == 1.0 { keep_prob } else { 1.0 - keep_prob })
                .product();
            Ok(l * space.prior.weight(None, &x)? / q)
        })
        .collect::<Result<Vec<f64>>>()?;
    weighted_mask_mean(&masks, &weights)
}

/// Runs `strategy` on `(learner, theta, space)`.
pub fn run_strategy<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    strategy: Strategy,
    seed: u64,
) -> Result<StrategyOutcome> {
    let mut diagnostics = StrategyDiagnostics::default();
    let (explanation, samples) = match strategy {
        Strategy::ExhaustiveMax => {
            if !space.enumerable() {
                return Err(Error::StrategySpaceMismatch(
                    "exhaustive-max needs an enumerable space".into(),
                ));
            }
            let post = teacher_posterior(learner, theta, space)?;
            let best = post.argmax()?;
            diagnostics.posterior_mass = Some((post.log_weights[best] - post.log_normalizer).exp());
            diagnostics.log_weight = Some(post.log_weights[best]);
            diagnostics.evaluations = post.len() as u64;
            (select_max(&post)?, Vec::new())
        }
        Strategy::Greedy => {
            let (x, lw, evals) = greedy_subsets(learner, theta, space)?;
            diagnostics.log_weight = Some(lw);
            diagnostics.evaluations = evals;
            (x, Vec::new())
        }
        Strategy::MhSample { n, burn_in } => {
            let proposal = Proposal::default_for(space)
                .map_err(|e| Error::StrategySpaceMismatch(e.to_string()))?;
            let run = mh_sample(learner, theta, space, proposal, seed, n, burn_in, None)?;
            diagnostics.acceptance_rate = Some(run.acceptance_rate);
            diagnostics.evaluations = (n + burn_in) as u64;
            let last = run.draws.last().cloned().ok_or(Error::EmptyPosterior)?;
            (last, run.draws)
        }
        Strategy::McExpectation { n } => {
            let s = mask_expectation(learner, theta, space, n, seed)?;
            diagnostics.evaluations = n as u64;
            (Explanation::SaliencyVector(s), Vec::new())
        }
    };
    Ok(StrategyOutcome {
        strategy,
        explanation,
        samples,
        diagnostics,
    })
}

/// Most frequent element among `draws`; ties go to the earliest first
/// occurrence.
pub fn empirical_mode(draws: &[Explanation]) -> Option<Explanation> {
    let mut counts: std::collections::HashMap<_, (usize, usize)> = std::collections::HashMap::new();
    for (i, d) in draws.iter().enumerate() {
        let key = d.key()?;
        counts.entry(key).or_insert((0, i)).0 += 1;
    }
    counts
        .into_values()
        .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, first)| draws[first].clone())
}
