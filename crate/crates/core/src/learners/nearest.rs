use std::sync::Arc;

use super::kernel::KernelConfig;
use crate::error::{check_dim, Error, Result};
use crate::models::Dataset;
use crate::teaching::{checked_prob, Explanation, Learner, TargetInference};

/// An explainee who labels a query like its nearest shown examples.
///
/// Each class is scored by the mean kernel similarity between the query and
/// that class's `k` nearest examples in the set; the scores are normalized
/// over classes. With `k = 1` the most likely label is the 1-NN label.
#[derive(Debug, Clone)]
pub struct NearestExampleLearner {
    pub dataset: Arc<Dataset>,
    pub kernel: KernelConfig,
    pub k: usize,
}

impl NearestExampleLearner {
    /// Normalized label distribution for `query` given the example set.
    pub fn label_distribution(&self, query: &[f64], examples: &[usize]) -> Result<Vec<f64>> {
        check_dim(self.dataset.dim(), query.len())?;
        let c = self.dataset.class_count;
        let mut sims: Vec<Vec<f64>> = vec![Vec::new(); c];
        for &i in examples {
            let x = self.dataset.features.get(i).ok_or_else(|| {
                Error::InvalidArgument(format!("example index {i} out of bounds"))
            })?;
            sims[self.dataset.labels[i]].push(self.kernel.eval(query, x));
        }
        let k = self.k.max(1);
        let mut scores: Vec<f64> = sims
            .into_iter()
            .map(|mut s| {
                if s.is_empty() {
                    return 0.0;
                }
                s.sort_by(|a, b| b.total_cmp(a));
                let top = &s[..k.min(s.len())];
                top.iter().sum::<f64>() / top.len() as f64
            })
            .collect();
        let total: f64 = scores.iter().sum();
        if total > 0.0 {
            scores.iter_mut().for_each(|v| *v /= total);
        } else {
            // the query is beyond kernel reach of every example
            scores.iter_mut().for_each(|v| *v = 1.0 / c as f64);
        }
        Ok(scores)
    }
}

impl Learner for NearestExampleLearner {
    fn id(&self) -> &str {
        "nearest-example"
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.likelihood(theta, x)?.ln())
    }

    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let TargetInference::PredictedLabel {
            label,
            point: Some(query),
        } = theta
        else {
            return Err(Error::InvalidArgument(
                "nearest-example learner needs a predicted label with its query point".into(),
            ));
        };
        let dist = self.label_distribution(query, x.as_example_set()?)?;
        checked_prob(dist.get(*label).copied().unwrap_or(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn learner(k: usize) -> NearestExampleLearner {
        let ds = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![5.0], vec![6.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        NearestExampleLearner {
            dataset: Arc::new(ds),
            kernel: KernelConfig::rbf(2.0).unwrap(),
            k,
        }
    }

    #[test]
    fn most_likely_label_is_the_nearest_neighbour_label() {
        let l = learner(1);
        let x = Explanation::ExampleSet(vec![1, 2]);
        let near0 = TargetInference::label_at(0, vec![2.0]);
        let near1 = TargetInference::label_at(1, vec![2.0]);
        assert!(l.likelihood(&near0, &x).unwrap() > l.likelihood(&near1, &x).unwrap());
        let far = TargetInference::label_at(1, vec![4.0]);
        assert!(l.likelihood(&far, &x).unwrap() > 0.5);
    }

    #[test]
    fn absent_class_has_zero_likelihood() {
        let l = learner(2);
        let x = Explanation::ExampleSet(vec![0, 1]);
        assert_eq!(
            l.likelihood(&TargetInference::label_at(1, vec![5.5]), &x)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn query_point_is_required() {
        let l = learner(1);
        assert!(l
            .likelihood(
                &TargetInference::label(0),
                &Explanation::ExampleSet(vec![0])
            )
            .is_err());
    }
}
