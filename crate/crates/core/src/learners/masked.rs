use crate::error::{check_dim, Error, Result};
use crate::models::Classifier;
use crate::teaching::{checked_prob, Explanation, Learner, TargetInference};

/// Blend of `point` where the mask is 1 and `baseline` where it is 0.
pub fn apply_mask(point: &[f64], mask: &[f64], baseline: &[f64]) -> Vec<f64> {
    point
        .iter()
        .zip(mask)
        .zip(baseline)
        .map(|((&x, &m), &b)| if m == 1.0 { x } else { m * x + (1.0 - m) * b })
        .collect()
}

/// Probability the model gives `label` once the occluded features are
/// replaced by the baseline.
pub fn masked_prediction_likelihood<C: Classifier + ?Sized>(
    model: &C,
    point: &[f64],
    mask: &[f64],
    label: usize,
    baseline: &[f64],
) -> Result<f64> {
    check_dim(model.dim(), point.len())?;
    check_dim(point.len(), mask.len())?;
    check_dim(point.len(), baseline.len())?;
    if label >= model.class_count() {
        return Err(Error::InvalidArgument(format!(
            "class {label} out of range"
        )));
    }
    let p = model.predict_dist(&apply_mask(point, mask, baseline))?;
    checked_prob(p[label])
}

/// The explainee sees only the unmasked features of one point and infers
/// the model's label from them.
#[derive(Debug, Clone)]
pub struct MaskedPredictionLearner<C> {
    pub model: C,
    pub point: Vec<f64>,
    pub baseline: Vec<f64>,
}

impl<C: Classifier> Learner for MaskedPredictionLearner<C> {
    fn id(&self) -> &str {
        "masked-prediction"
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.likelihood(theta, x)?.ln())
    }

    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let TargetInference::PredictedLabel { label, .. } = theta else {
            return Err(Error::InvalidArgument(format!(
                "masked-prediction learner scores predicted labels, not {:?}",
                theta.kind()
            )));
        };
        masked_prediction_likelihood(
            &self.model,
            &self.point,
            x.as_mask()?,
            *label,
            &self.baseline,
        )
    }
}
