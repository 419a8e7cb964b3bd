//! Metropolis sampling of the teacher posterior when the space is too large
//! to enumerate. Only unnormalized weights are ever evaluated.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::learner::{checked_log, Learner};
use super::space::{ExplanationSpace, SpaceDescriptor};
use super::types::{Explanation, TargetInference};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Symmetric proposal kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Proposal {
    /// Replace one chosen element by one unchosen element of the same pool.
    ElementSwap,
    /// Flip one mask bit; each recorded step sweeps every bit once in order.
    BitFlip,
    /// Jump to a uniformly chosen different list element.
    UniformJump,
}

impl Proposal {
    pub fn default_for(space: &ExplanationSpace) -> Result<Self> {
        match space.descriptor {
            SpaceDescriptor::Subsets { .. } | SpaceDescriptor::PerClassSubsets { .. } => {
                Ok(Proposal::ElementSwap)
            }
            SpaceDescriptor::Masks { .. } => Ok(Proposal::BitFlip),
            SpaceDescriptor::Listed { .. } => Ok(Proposal::UniformJump),
            SpaceDescriptor::SurrogateParameters { .. } => Err(Error::InvalidArgument(
                "no symmetric proposal for continuous surrogate spaces".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McmcRun {
    pub draws: Vec<Explanation>,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone)]
enum State {
    /// Chosen positions for each pool (a plain subset space has one pool).
    Pools(Vec<Vec<bool>>),
    Bits(Vec<f64>),
    Index(usize),
}

struct Chain<'a> {
    space: &'a ExplanationSpace,
    pools: Vec<Vec<usize>>,
    size: usize,
}

impl<'a> Chain<'a> {
    fn new(space: &'a ExplanationSpace, proposal: Proposal) -> Result<Self> {
        space.validate()?;
        let (pools, size) = match (&space.descriptor, proposal) {
            (SpaceDescriptor::Subsets { pool, size }, Proposal::ElementSwap) => {
                (vec![pool.clone()], *size)
            }
            (SpaceDescriptor::PerClassSubsets { pools, size }, Proposal::ElementSwap) => {
                (pools.clone(), *size)
            }
            (SpaceDescriptor::Masks { .. }, Proposal::BitFlip)
            | (SpaceDescriptor::Listed { .. }, Proposal::UniformJump) => (Vec::new(), 0),
            (d, p) => {
                return Err(Error::InvalidArgument(format!(
                    "proposal {p:?} does not fit space {}",
                    descriptor_name(d)
                )))
            }
        };
        Ok(Self { space, pools, size })
    }

    fn default_start(&self) -> State {
        match &self.space.descriptor {
            SpaceDescriptor::Masks { dim, .. } => State::Bits(vec![1.0; *dim]),
            SpaceDescriptor::Listed { .. } => State::Index(0),
            _ => State::Pools(
                self.pools
                    .iter()
                    .map(|p| (0..p.len()).map(|i| i < self.size).collect())
                    .collect(),
            ),
        }
    }

    fn state_of(&self, x: &Explanation) -> Result<State> {
        let bad = || Error::InvalidArgument("start state is not an element of the space".into());
        match &self.space.descriptor {
            SpaceDescriptor::Masks { dim, .. } => {
                let m = x.as_mask()?;
                if m.len() != *dim || m.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(bad());
                }
                Ok(State::Bits(m.to_vec()))
            }
            SpaceDescriptor::Listed { items } => items
                .iter()
                .position(|i| i == x)
                .map(State::Index)
                .ok_or_else(bad),
            _ => {
                let set = x.as_example_set()?;
                let mut chosen: Vec<Vec<bool>> =
                    self.pools.iter().map(|p| vec![false; p.len()]).collect();
                for &ix in set {
                    let (c, pos) = self
                        .pools
                        .iter()
                        .enumerate()
                        .find_map(|(c, p)| p.iter().position(|&v| v == ix).map(|pos| (c, pos)))
                        .ok_or_else(bad)?;
                    if chosen[c][pos] {
                        return Err(bad());
                    }
                    chosen[c][pos] = true;
                }
                if chosen
                    .iter()
                    .any(|c| c.iter().filter(|&&b| b).count() != self.size)
                {
                    return Err(bad());
                }
                Ok(State::Pools(chosen))
            }
        }
    }

    fn explanation(&self, state: &State) -> Explanation {
        match state {
            State::Pools(chosen) => Explanation::ExampleSet(
                chosen
                    .iter()
                    .zip(&self.pools)
                    .flat_map(|(c, p)| c.iter().zip(p).filter(|(&b, _)| b).map(|(_, &v)| v))
                    .collect(),
            ),
            State::Bits(b) => Explanation::FeatureMask(b.clone()),
            State::Index(i) => match &self.space.descriptor {
                SpaceDescriptor::Listed { items } => items[*i].clone(),
                _ => unreachable!(),
            },
        }
    }

    fn index(&self, state: &State) -> Option<usize> {
        match state {
            State::Index(i) => Some(*i),
            _ => None,
        }
    }

    /// Single-site updates per recorded step.
    fn updates_per_step(&self, state: &State) -> usize {
        match state {
            State::Bits(b) => b.len(),
            _ => 1,
        }
    }

    fn propose(&self, state: &State, update: usize, rng: &mut Rng) -> State {
        match state {
            State::Pools(chosen) => {
                let movable: Vec<usize> = (0..chosen.len())
                    .filter(|&c| chosen[c].len() > self.size)
                    .collect();
                if movable.is_empty() {
                    return state.clone();
                }
                let c = movable[rng.random_range(0..movable.len())];
                let members: Vec<usize> = (0..chosen[c].len()).filter(|&i| chosen[c][i]).collect();
                let others: Vec<usize> = (0..chosen[c].len()).filter(|&i| !chosen[c][i]).collect();
                let out = members[rng.random_range(0..members.len())];
                let inn = others[rng.random_range(0..others.len())];
                let mut next = chosen.clone();
                next[c][out] = false;
                next[c][inn] = true;
                State::Pools(next)
            }
            State::Bits(bits) => {
                let j = update % bits.len();
                let mut next = bits.clone();
                next[j] = 1.0 - next[j];
                State::Bits(next)
            }
            State::Index(i) => {
                let n = match &self.space.descriptor {
                    SpaceDescriptor::Listed { items } => items.len(),
                    _ => unreachable!(),
                };
                if n == 1 {
                    return state.clone();
                }
                let mut j = rng.random_range(0..n - 1);
                if j >= *i {
                    j += 1;
                }
                State::Index(j)
            }
        }
    }
}

fn descriptor_name(d: &SpaceDescriptor) -> &'static str {
    match d {
        SpaceDescriptor::Subsets { .. } => "subsets",
        SpaceDescriptor::PerClassSubsets { .. } => "per-class subsets",
        SpaceDescriptor::Masks { .. } => "masks",
        SpaceDescriptor::Listed { .. } => "listed",
        SpaceDescriptor::SurrogateParameters { .. } => "surrogate parameters",
    }
}

fn log_target<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    index: Option<usize>,
    x: &Explanation,
) -> Result<f64> {
    let lp = space.prior.log_weight(index, x)?;
    if lp == f64::NEG_INFINITY {
        return Ok(lp);
    }
    Ok(checked_log(learner.log_likelihood(theta, x)?)? + lp)
}

/// Metropolis chain targeting the teacher posterior. Runs `burn_in` steps,
/// then records the state after each of the next `n` steps. A step is one
/// proposal, except for masks where it is a full sweep of bit flips.
#[allow(clippy::too_many_arguments)]
pub fn mh_sample<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    proposal: Proposal,
    seed: u64,
    n: usize,
    burn_in: usize,
    start: Option<&Explanation>,
) -> Result<McmcRun> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let chain = Chain::new(space, proposal)?;
    let mut state = match start {
        Some(x) => chain.state_of(x)?,
        None => chain.default_start(),
    };
    let mut current_x = chain.explanation(&state);
    let mut current = log_target(learner, theta, space, chain.index(&state), &current_x)?;
    if current == f64::NEG_INFINITY {
        return Err(Error::ZeroStartMass);
    }

    let mut rng = rng::seeded(seed);
    let mut draws = Vec::with_capacity(n);
    let mut accepted = 0usize;
    let per_step = chain.updates_per_step(&state);
    for step in 0..burn_in + n {
        for update in 0..per_step {
            let next = chain.propose(&state, update, &mut rng);
            let next_x = chain.explanation(&next);
            let lw = log_target(learner, theta, space, chain.index(&next), &next_x)?;
            let u: f64 = rng.random();
            if lw > f64::NEG_INFINITY && u.ln() < lw - current {
                state = next;
                current_x = next_x;
                current = lw;
                accepted += 1;
            }
        }
        if step >= burn_in {
            draws.push(current_x.clone());
        }
    }
    Ok(McmcRun {
        draws,
        acceptance_rate: accepted as f64 / ((burn_in + n) * per_step) as f64,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::teaching::learner::{ConstantLearner, TableLearner};
    use crate::teaching::posterior::teacher_posterior;

    fn theta() -> TargetInference {
        TargetInference::label(1)
    }

    fn tv_against_exact<L: Learner>(learner: &L, space: &ExplanationSpace, run: &McmcRun) -> f64 {
        let post = teacher_posterior(learner, &theta(), space).unwrap();
        let mut freq: HashMap<_, f64> = HashMap::new();
        for d in &run.draws {
            *freq.entry(d.key().unwrap()).or_default() += 1.0 / run.draws.len() as f64;
        }
        let mut tv = 0.0;
        for (x, p) in post.support.iter().zip(post.probabilities()) {
            tv += (freq.remove(&x.key().unwrap()).unwrap_or(0.0) - p).abs();
        }
        tv += freq.values().sum::<f64>();
        0.5 * tv
    }

    #[test]
    fn element_swap_chain_matches_exact_posterior() {
        // 21 two-subsets of a 7-point pool with uneven weights.
        let space = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: (10..17).collect(),
            size: 2,
        });
        let items = space.enumerate().unwrap();
        let vals: Vec<f64> = (0..items.len())
            .map(|i| 0.05 + ((i * 7) % 11) as f64 / 11.0)
            .collect();
        let learner = TableLearner::single(theta(), &items, vals);
        let run = mh_sample(
            &learner,
            &theta(),
            &space,
            Proposal::ElementSwap,
            5,
            200_000,
            1_000,
            None,
        )
        .unwrap();
        assert_eq!(run.draws.len(), 200_000);
        let tv = tv_against_exact(&learner, &space, &run);
        assert!(tv < 0.05, "tv = {tv}");
    }

    #[test]
    fn listed_chain_matches_exact_posterior() {
        let items: Vec<_> = (0..20)
            .map(|i| Explanation::ExampleSet(vec![i, i + 20]))
            .collect();
        let vals: Vec<f64> = (0..20).map(|i| 1.0 + (i % 5) as f64).collect();
        let learner = TableLearner::single(theta(), &items, vals);
        let weights: Vec<f64> = (0..20)
            .map(|i| if i % 3 == 0 { 2.0 } else { 1.0 })
            .collect();
        let space = ExplanationSpace::listed(items, Some(weights));
        let run = mh_sample(
            &learner,
            &theta(),
            &space,
            Proposal::UniformJump,
            8,
            200_000,
            500,
            None,
        )
        .unwrap();
        assert!(tv_against_exact(&learner, &space, &run) < 0.05);
    }

    #[test]
    fn chain_absorbs_at_single_support_point() {
        let space = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: (0..6).collect(),
            size: 2,
        });
        let items = space.enumerate().unwrap();
        let mut vals = vec![0.0; items.len()];
        vals[7] = 0.3;
        let learner = TableLearner::single(theta(), &items, vals);
        let run = mh_sample(
            &learner,
            &theta(),
            &space,
            Proposal::ElementSwap,
            1,
            1_000,
            10,
            Some(&items[7]),
        )
        .unwrap();
        assert!(run.draws.iter().all(|d| *d == items[7]));
        assert_eq!(run.acceptance_rate, 0.0);
    }

    #[test]
    fn zero_mass_start_is_rejected() {
        let space = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: (0..6).collect(),
            size: 2,
        });
        let items = space.enumerate().unwrap();
        let mut vals = vec![0.0; items.len()];
        vals[7] = 0.3;
        let learner = TableLearner::single(theta(), &items, vals);
        let err = mh_sample(
            &learner,
            &theta(),
            &space,
            Proposal::ElementSwap,
            1,
            10,
            0,
            None,
        );
        assert!(matches!(err, Err(Error::ZeroStartMass)));
    }

    #[test]
    fn constant_learner_on_masks_recovers_keep_probability() {
        let space = ExplanationSpace::masks(30, 0.3);
        let run = mh_sample(
            &ConstantLearner { value: 1.0 },
            &theta(),
            &space,
            Proposal::BitFlip,
            4,
            100_000,
            2_000,
            None,
        )
        .unwrap();
        for j in 0..30 {
            let f = run
                .draws
                .iter()
                .map(|d| d.as_mask().unwrap()[j])
                .sum::<f64>()
                / run.draws.len() as f64;
            assert!((f - 0.3).abs() < 0.02, "bit {j}: {f}");
        }
    }

    #[test]
    fn per_class_swaps_stay_within_class() {
        let space = ExplanationSpace::uniform(SpaceDescriptor::PerClassSubsets {
            pools: vec![vec![0, 1, 2, 3], vec![4, 5, 6]],
            size: 2,
        });
        let run = mh_sample(
            &ConstantLearner { value: 1.0 },
            &theta(),
            &space,
            Proposal::ElementSwap,
            2,
            500,
            0,
            None,
        )
        .unwrap();
        for d in run.draws {
            let s = d.as_example_set().unwrap();
            assert_eq!(s.len(), 4);
            assert!(s[..2].iter().all(|&i| i < 4) && s[2..].iter().all(|&i| i >= 4));
        }
    }

    #[test]
    fn mismatched_proposal_is_rejected() {
        let space = ExplanationSpace::masks(4, 0.5);
        assert!(mh_sample(
            &ConstantLearner { value: 1.0 },
            &theta(),
            &space,
            Proposal::ElementSwap,
            0,
            10,
            0,
            None
        )
        .is_err());
    }
}
