use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::learner::{checked_log, Learner};
use super::space::ExplanationSpace;
use super::types::{Explanation, TargetInference};
use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::rng;

/// Normalized teacher distribution `P_T(x | theta)` over an enumerable space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherPosterior {
    /// Positive-prior elements, in enumeration order.
    pub support: Vec<Explanation>,
    /// Enumeration index of each support element.
    pub indices: Vec<usize>,
    /// `log P_L(theta | x) + log P(x)` per element.
    pub log_weights: Vec<f64>,
    /// Log of the sum of all weights.
    pub log_normalizer: f64,
}

impl TeacherPosterior {
    pub fn from_log_weights(support: Vec<Explanation>, log_weights: Vec<f64>) -> Result<Self> {
        if support.len() != log_weights.len() {
            return Err(Error::InvalidArgument(
                "support and weights differ in length".into(),
            ));
        }
        if support.is_empty() {
            return Err(Error::EmptyPosterior);
        }
        let log_normalizer = logsumexp(&log_weights);
        if log_normalizer == f64::NEG_INFINITY {
            return Err(Error::AllZeroMass);
        }
        let indices = (0..support.len()).collect();
        Ok(Self {
            support,
            indices,
            log_weights,
            log_normalizer,
        })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_weights
            .iter()
            .map(|lw| (lw - self.log_normalizer).exp())
            .collect()
    }

    /// Position (within `support`) of the largest weight; the earliest
    /// position wins ties.
    pub fn argmax(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyPosterior);
        }
        let mut best = 0;
        for (i, lw) in self.log_weights.iter().enumerate() {
            if *lw > self.log_weights[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Evaluates the teacher posterior over every element of an enumerable
/// space. Learner calls run in parallel; the normalization is a sequential
/// log-sum-exp over the results in enumeration order, so the output does
/// not depend on the thread count.
pub fn teacher_posterior<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<TeacherPosterior> {
    if !space.enumerable() {
        return Err(Error::NotEnumerable);
    }
    theta.validate()?;
    let items = space.enumerate()?;
    let scored: Vec<Option<f64>> = items
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<Option<f64>> {
            let prior = space.prior.weight(Some(i), x)?;
            if prior == 0.0 {
                return Ok(None);
            }
            let ll = checked_log(learner.log_likelihood(theta, x)?)?;
            Ok(Some(ll + space.prior.log_weight(Some(i), x)?))
        })
        .collect::<Result<_>>()?;

    let mut support = Vec::new();
    let mut indices = Vec::new();
    let mut log_weights = Vec::new();
    for (i, (x, lw)) in items.into_iter().zip(scored).enumerate() {
        if let Some(lw) = lw {
            support.push(x);
            indices.push(i);
            log_weights.push(lw);
        }
    }
    if support.is_empty() {
        return Err(Error::AllZeroMass);
    }
    let log_normalizer = logsumexp(&log_weights);
    if log_normalizer == f64::NEG_INFINITY {
        return Err(Error::AllZeroMass);
    }
    Ok(TeacherPosterior {
        support,
        indices,
        log_weights,
        log_normalizer,
    })
}

/// The most probable explanation; ties go to the lowest enumeration index.
pub fn select_max(posterior: &TeacherPosterior) -> Result<Explanation> {
    Ok(posterior.support[posterior.argmax()?].clone())
}

/// `n` independent draws from the posterior.
pub fn sample_posterior(
    posterior: &TeacherPosterior,
    seed: u64,
    n: usize,
) -> Result<Vec<Explanation>> {
    Ok(sample_positions(posterior, seed, n)?
        .into_iter()
        .map(|i| posterior.support[i].clone())
        .collect())
}

/// Like [`sample_posterior`] but returns support positions.
pub fn sample_positions(posterior: &TeacherPosterior, seed: u64, n: usize) -> Result<Vec<usize>> {
    if posterior.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let dist = WeightedIndex::new(posterior.probabilities())
        .map_err(|e| Error::InvalidArgument(format!("cannot sample posterior: {e}")))?;
    let mut rng = rng::seeded(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teaching::learner::{ConstantLearner, Scaled, TableLearner};

    fn two_items() -> Vec<Explanation> {
        vec![
            Explanation::ExampleSet(vec![0]),
            Explanation::ExampleSet(vec![1]),
        ]
    }

    fn theta() -> TargetInference {
        TargetInference::label(0)
    }

    #[test]
    fn uniform_prior_normalizes_likelihood() {
        let items = two_items();
        let learner = TableLearner::single(theta(), &items, vec![0.8, 0.2]);
        let space = ExplanationSpace::listed(items, None);
        let post = teacher_posterior(&learner, &theta(), &space).unwrap();
        let p = post.probabilities();
        assert!((p[0] - 0.8).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
        assert_eq!(select_max(&post).unwrap(), Explanation::ExampleSet(vec![0]));
    }

    #[test]
    fn prior_reweights_likelihood() {
        let items = two_items();
        let learner = TableLearner::single(theta(), &items, vec![0.3, 0.6]);
        let space = ExplanationSpace::listed(items, Some(vec![2.0, 1.0]));
        let post = teacher_posterior(&learner, &theta(), &space).unwrap();
        let p = post.probabilities();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exact_ties_go_to_lowest_index() {
        let post = TeacherPosterior::from_log_weights(two_items(), vec![0.5f64.ln(), 0.5f64.ln()])
            .unwrap();
        assert_eq!(post.argmax().unwrap(), 0);
    }

    #[test]
    fn zero_prior_elements_leave_support() {
        let items = vec![
            Explanation::ExampleSet(vec![0]),
            Explanation::ExampleSet(vec![1]),
            Explanation::ExampleSet(vec![2]),
        ];
        let space = ExplanationSpace::listed(items, Some(vec![1.0, 0.0, 3.0]));
        let post = teacher_posterior(&ConstantLearner { value: 0.5 }, &theta(), &space).unwrap();
        assert_eq!(post.indices, vec![0, 2]);
        let p = post.probabilities();
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn all_zero_mass_is_an_error() {
        let items = two_items();
        let learner = TableLearner::single(theta(), &items, vec![0.0, 0.0]);
        let space = ExplanationSpace::listed(items, None);
        assert!(matches!(
            teacher_posterior(&learner, &theta(), &space),
            Err(Error::AllZeroMass)
        ));
    }

    #[test]
    fn non_enumerable_space_rejected() {
        let space = ExplanationSpace::masks(64, 0.5);
        assert!(matches!(
            teacher_posterior(&ConstantLearner { value: 1.0 }, &theta(), &space),
            Err(Error::NotEnumerable)
        ));
    }

    #[test]
    fn degenerate_posterior_always_samples_the_mass() {
        let items = two_items();
        let learner = TableLearner::single(theta(), &items, vec![1.0, 0.0]);
        let space = ExplanationSpace::listed(items.clone(), None);
        let post = teacher_posterior(&learner, &theta(), &space).unwrap();
        for seed in 0..5 {
            let draws = sample_posterior(&post, seed, 5).unwrap();
            assert!(draws.iter().all(|x| *x == items[0]));
        }
    }

    #[test]
    fn fair_posterior_sampling_frequency() {
        let post = TeacherPosterior::from_log_weights(two_items(), vec![0.0, 0.0]).unwrap();
        let pos = sample_positions(&post, 11, 100_000).unwrap();
        let f = pos.iter().filter(|&&i| i == 0).count() as f64 / 1e5;
        assert!((f - 0.5).abs() < 0.01, "{f}");
    }

    #[test]
    fn three_way_sampling_total_variation() {
        let items = vec![
            Explanation::ExampleSet(vec![0]),
            Explanation::ExampleSet(vec![1]),
            Explanation::ExampleSet(vec![2]),
        ];
        let target = [0.7, 0.2, 0.1];
        let post = TeacherPosterior::from_log_weights(
            items,
            target.iter().map(|p: &f64| p.ln()).collect(),
        )
        .unwrap();
        let pos = sample_positions(&post, 3, 100_000).unwrap();
        let mut hist = [0.0; 3];
        for i in pos {
            hist[i] += 1.0 / 1e5;
        }
        let tv: f64 = 0.5
            * hist
                .iter()
                .zip(target)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let post = TeacherPosterior::from_log_weights(two_items(), vec![0.1, -0.3]).unwrap();
        assert_eq!(
            sample_positions(&post, 99, 50).unwrap(),
            sample_positions(&post, 99, 50).unwrap()
        );
    }

    #[test]
    fn scaling_the_learner_changes_nothing() {
        let items: Vec<_> = (0..6).map(|i| Explanation::ExampleSet(vec![i])).collect();
        let vals = vec![0.1, 0.4, 0.05, 0.4, 0.3, 0.2];
        let base = TableLearner::single(theta(), &items, vals);
        let space = ExplanationSpace::listed(items, None);
        let a = teacher_posterior(&base, &theta(), &space).unwrap();
        let scaled = Scaled {
            inner: base.clone(),
            factor: 37.5,
        };
        let b = teacher_posterior(&scaled, &theta(), &space).unwrap();
        assert_eq!(a.argmax().unwrap(), b.argmax().unwrap());
        for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
