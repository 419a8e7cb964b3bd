//! Saliency as the likelihood-weighted mean of random occlusion masks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::saliency::SaliencyVector;
use crate::error::{check_dim, Error, Result};
use crate::learners::{masked_prediction_likelihood, MaskedPredictionLearner};
use crate::models::Classifier;
use crate::teacher::{sample_masks, weighted_mask_mean};
use crate::teaching::{teacher_posterior, Explanation, ExplanationSpace, TargetInference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiseConfig {
    pub masks: usize,
    pub keep_prob: f64,
}

impl RiseConfig {
    fn validate(&self) -> Result<()> {
        if self.masks == 0 {
            return Err(Error::InvalidArgument(
                "mask count must be at least 1".into(),
            ));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "keep probability must be in (0, 1), got {}",
                self.keep_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiseResult {
    pub saliency: SaliencyVector,
    /// Masks in draw order, with the likelihood weight of each.
    #[serde(skip)]
    pub masks: Vec<Vec<f64>>,
    #[serde(skip)]
    pub weights: Vec<f64>,
}

/// `saliency_j = sum_i w_i M_ij / sum_i w_i` with `w_i` the model's
/// probability for `label` when only mask `i`'s features are shown.
pub fn rise_saliency<C: Classifier + ?Sized>(
    model: &C,
    point: &[f64],
    label: usize,
    baseline: &[f64],
    config: &RiseConfig,
    seed: u64,
) -> Result<RiseResult> {
    config.validate()?;
    check_dim(model.dim(), point.len())?;
    let masks = sample_masks(point.len(), config.masks, config.keep_prob, seed);
    let weights = masks
        .par_iter()
        .map(|m| masked_prediction_likelihood(model, point, m, label, baseline))
        .collect::<Result<Vec<f64>>>()?;
    let saliency = weighted_mask_mean(&masks, &weights)?;
    Ok(RiseResult {
        saliency,
        masks,
        weights,
    })
}

/// The same estimate phrased as a teaching problem: the candidate pool is
/// the drawn masks under a uniform prior, the learner is the
/// masked-prediction explainee, and the saliency is the teacher-posterior
/// mean mask.
pub fn rise_as_teaching<C: Classifier + Clone>(
    model: &C,
    point: &[f64],
    label: usize,
    baseline: &[f64],
    masks: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let learner = MaskedPredictionLearner {
        model: model.clone(),
        point: point.to_vec(),
        baseline: baseline.to_vec(),
    };
    let space = ExplanationSpace::listed(
        masks
            .iter()
            .cloned()
            .map(Explanation::FeatureMask)
            .collect(),
        None,
    );
    let post = teacher_posterior(&learner, &TargetInference::label(label), &space)?;
    let mut mean = vec![0.0; point.len()];
    for (x, p) in post.support.iter().zip(post.probabilities()) {
        for (a, v) in mean.iter_mut().zip(x.as_mask()?) {
            *a += p * v;
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TargetModel;

    #[test]
    fn constant_model_gives_keep_probability_everywhere() {
        let model = TargetModel::linear_probability(vec![0.0; 6], 0.7);
        let point = vec![1.0; 6];
        let res = rise_saliency(
            &model,
            &point,
            1,
            &[0.0; 6],
            &RiseConfig {
                masks: 10_000,
                keep_prob: 0.3,
            },
            5,
        )
        .unwrap();
        let se = res.saliency.std_error.as_ref().unwrap();
        for (v, s) in res.saliency.values.iter().zip(se) {
            assert!((v - 0.3).abs() < 3.0 * s, "{v} vs 0.3 (se {s})");
        }
    }

    #[test]
    fn zero_weights_are_reported() {
        let model = TargetModel::linear_probability(vec![0.0; 3], 1.0);
        let err = rise_saliency(
            &model,
            &[0.0; 3],
            0,
            &[0.0; 3],
            &RiseConfig {
                masks: 20,
                keep_prob: 0.5,
            },
            1,
        );
        assert!(matches!(err, Err(Error::ZeroTotalWeight)));
    }

    #[test]
    fn teaching_formulation_reproduces_the_estimate() {
        let model = TargetModel::linear_probability(vec![0.1, -0.2, 0.05, 0.3], 0.4);
        let point = [1.0, 0.5, -1.0, 0.8];
        let base = [0.2; 4];
        let cfg = RiseConfig {
            masks: 500,
            keep_prob: 0.5,
        };
        let res = rise_saliency(&model, &point, 1, &base, &cfg, 3).unwrap();
        let via = rise_as_teaching(&model, &point, 1, &base, &res.masks).unwrap();
        for (a, b) in via.iter().zip(&res.saliency.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
