use std::sync::Arc;

use crate::error::{Error, Result};
use crate::models::{Dataset, PldaParams};
use crate::teaching::{Explanation, Learner, TargetInference};

/// Log density the mean posterior of a PLDA conditioned on `fit_subset`
/// assigns to the full-data latent class means.
pub fn plda_posterior_over_means(params: &PldaParams, fit_subset: &Dataset) -> Result<f64> {
    params.log_mean_density(
        fit_subset
            .features
            .iter()
            .zip(&fit_subset.labels)
            .map(|(x, &c)| (x.as_slice(), c)),
        &params.class_means,
    )
}

/// Scores an example set by how strongly a PLDA refitted on it would
/// recover the target's latent class means.
#[derive(Debug, Clone)]
pub struct PldaLearner {
    pub params: Arc<PldaParams>,
    pub dataset: Arc<Dataset>,
}

impl PldaLearner {
    pub fn new(params: Arc<PldaParams>, dataset: Arc<Dataset>) -> Self {
        Self { params, dataset }
    }
}

impl Learner for PldaLearner {
    fn id(&self) -> &str {
        "plda"
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let TargetInference::LatentClassMeans { means } = theta else {
            return Err(Error::InvalidArgument(format!(
                "plda learner scores latent class means, not {:?}",
                theta.kind()
            )));
        };
        let set = x.as_example_set()?;
        if let Some(&bad) = set.iter().find(|&&i| i >= self.dataset.len()) {
            return Err(Error::InvalidArgument(format!(
                "example index {bad} out of bounds"
            )));
        }
        self.params.log_mean_density(
            set.iter()
                .map(|&i| (self.dataset.features[i].as_slice(), self.dataset.labels[i])),
            means,
        )
    }
}
