use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::kl_divergence;
use crate::models::Classifier;
use crate::teaching::{Explanation, Learner, TargetInference};

/// Points at which a surrogate is compared with the target, with
/// nonnegative importance weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probes {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Probes {
    pub fn uniform(points: Vec<Vec<f64>>) -> Self {
        let weights = vec![1.0; points.len()];
        Self { points, weights }
    }

    pub fn validate(&self) -> Result<f64> {
        if self.points.len() != self.weights.len() || self.points.is_empty() {
            return Err(Error::InvalidArgument("need one weight per probe".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(
                "probe weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        Ok(total)
    }
}

/// Probability the surrogate gives `class` at `z`. A linear surrogate
/// models that probability directly.
fn surrogate_prob(surrogate: &Explanation, z: &[f64], class: usize) -> Result<f64> {
    match surrogate {
        Explanation::LinearWeights(lw) => {
            check_dim(lw.weights.len(), z.len())?;
            Ok(lw.evaluate(z))
        }
        Explanation::SoftTree(t) => {
            check_dim(t.dim(), z.len())?;
            t.predict(z)
                .get(class)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("class {class} out of range")))
        }
        other => Err(Error::InvalidArgument(format!(
            "{:?} is not a surrogate model",
            other.kind()
        ))),
    }
}

/// Full class distribution of the surrogate at `z`. A linear surrogate
/// stands for the class-1 probability of a two-class target and is clipped
/// into the open unit interval.
fn surrogate_dist(surrogate: &Explanation, z: &[f64], classes: usize) -> Result<Vec<f64>> {
    match surrogate {
        Explanation::SoftTree(t) => {
            check_dim(t.dim(), z.len())?;
            check_dim(classes, t.class_count())?;
            Ok(t.predict(z))
        }
        Explanation::LinearWeights(lw) if classes == 2 => {
            check_dim(lw.weights.len(), z.len())?;
            let p = lw.evaluate(z).clamp(1e-12, 1.0 - 1e-12);
            Ok(vec![1.0 - p, p])
        }
        other => Err(Error::InvalidArgument(format!(
            "{:?} cannot represent a {classes}-class distribution",
            other.kind()
        ))),
    }
}

/// Weighted mean mismatch between surrogate and target values over probes.
/// `targets` holds the target's class distribution at each probe.
pub fn surrogate_loss_against(
    surrogate: &Explanation,
    probes: &Probes,
    targets: &[Vec<f64>],
    theta: &TargetInference,
) -> Result<f64> {
    let total = probes.validate()?;
    check_dim(probes.points.len(), targets.len())?;
    let mut acc = 0.0;
    match theta {
        TargetInference::LocalDecisionBoundary { class, .. } => {
            for ((z, w), t) in probes.points.iter().zip(&probes.weights).zip(targets) {
                let r = surrogate_prob(surrogate, z, *class)? - t[*class];
                acc += w * r * r;
            }
        }
        TargetInference::PredictiveDistribution { .. } => {
            for ((z, w), t) in probes.points.iter().zip(&probes.weights).zip(targets) {
                acc += w * kl_divergence(t, &surrogate_dist(surrogate, z, t.len())?);
            }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "surrogate fit is defined for decision boundaries and predictive distributions, not {:?}",
                other.kind()
            )))
        }
    }
    Ok(acc / total)
}

/// Weighted mean loss of `surrogate` against `target` over `probes`.
pub fn surrogate_fit_loss<C: Classifier + ?Sized>(
    surrogate: &Explanation,
    target: &C,
    probes: &Probes,
    theta: &TargetInference,
) -> Result<f64> {
    let targets = probes
        .points
        .iter()
        .map(|z| target.predict_dist(z))
        .collect::<Result<Vec<_>>>()?;
    surrogate_loss_against(surrogate, probes, &targets, theta)
}

/// `P_L(theta | surrogate) = exp(-loss / temperature)`.
#[derive(Debug, Clone)]
pub struct SurrogateLearner<C> {
    pub target: C,
    pub probes: Probes,
    pub temperature: f64,
}

impl<C: Classifier> Learner for SurrogateLearner<C> {
    fn id(&self) -> &str {
        "surrogate-fit"
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let loss = match theta {
            // the target distributions travel with theta when they match the probes
            TargetInference::PredictiveDistribution { distributions }
                if distributions.len() == self.probes.points.len() =>
            {
                surrogate_loss_against(x, &self.probes, distributions, theta)?
            }
            _ => surrogate_fit_loss(x, &self.target, &self.probes, theta)?,
        };
        Ok(-loss / self.temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticParams, TargetModel};
    use crate::teaching::LinearWeights;

    fn probes() -> Probes {
        Probes {
            points: (0..9)
                .map(|i| vec![i as f64 * 0.5 - 2.0, (i % 3) as f64])
                .collect(),
            weights: (0..9).map(|i| 0.2 + (i % 4) as f64).collect(),
        }
    }

    fn boundary() -> TargetInference {
        TargetInference::LocalDecisionBoundary {
            class: 1,
            center: vec![0.0, 0.0],
            width: 1.0,
        }
    }

    #[test]
    fn linear_copy_of_a_linear_target_has_zero_loss() {
        let target = TargetModel::linear_probability(vec![0.1, -0.05], 0.5);
        let copy = Explanation::LinearWeights(LinearWeights {
            weights: vec![0.1, -0.05],
            intercept: 0.5,
            weighted_r2: 1.0,
        });
        assert!(surrogate_fit_loss(&copy, &target, &probes(), &boundary()).unwrap() < 1e-10);
    }

    #[test]
    fn constant_surrogate_loss_is_weighted_variance() {
        let target = TargetModel::from_logistic(LogisticParams {
            weights: vec![vec![0.0, 0.0], vec![1.2, -0.4]],
            bias: vec![0.0, 0.1],
        });
        let pr = probes();
        let vals: Vec<f64> = pr
            .points
            .iter()
            .map(|z| target.predict_dist(z).unwrap()[1])
            .collect();
        let tw: f64 = pr.weights.iter().sum();
        let mean = vals
            .iter()
            .zip(&pr.weights)
            .map(|(v, w)| v * w)
            .sum::<f64>()
            / tw;
        let var = vals
            .iter()
            .zip(&pr.weights)
            .map(|(v, w)| w * (v - mean).powi(2))
            .sum::<f64>()
            / tw;
        let constant = Explanation::LinearWeights(LinearWeights {
            weights: vec![0.0, 0.0],
            intercept: mean,
            weighted_r2: 0.0,
        });
        let loss = surrogate_fit_loss(&constant, &target, &pr, &boundary()).unwrap();
        assert!((loss - var).abs() < 1e-12);

        let mut doubled = pr.clone();
        doubled.weights.iter_mut().for_each(|w| *w *= 2.0);
        let loss2 = surrogate_fit_loss(&constant, &target, &doubled, &boundary()).unwrap();
        assert!((loss - loss2).abs() < 1e-12);
    }

    #[test]
    fn all_zero_weights_are_rejected() {
        let mut pr = probes();
        pr.weights.iter_mut().for_each(|w| *w = 0.0);
        let target = TargetModel::linear_probability(vec![0.1, 0.0], 0.5);
        let s = Explanation::LinearWeights(LinearWeights {
            weights: vec![0.0, 0.0],
            intercept: 0.5,
            weighted_r2: 0.0,
        });
        assert!(surrogate_fit_loss(&s, &target, &pr, &boundary()).is_err());
    }
}
