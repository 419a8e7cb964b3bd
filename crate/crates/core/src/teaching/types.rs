use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::saliency::SaliencyVector;
use crate::explainers::soft_tree::SoftTree;

/// The fact about the target model that an explanation should convey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetInference {
    /// Label the target model assigns to a point. The point is carried
    /// along when the learner needs it to reason about the query.
    PredictedLabel {
        label: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<Vec<f64>>,
    },
    /// One probability vector per target point.
    PredictiveDistribution { distributions: Vec<Vec<f64>> },
    /// PLDA latent class means fitted on the full dataset.
    LatentClassMeans { means: Vec<Vec<f64>> },
    /// Data distribution of one class, given as a reference sample.
    ClassDataDistribution {
        class: usize,
        reference: Vec<Vec<f64>>,
    },
    /// Decision boundary of the target around `center`, for the
    /// probability of `class`, within a neighbourhood of scale `width`.
    LocalDecisionBoundary {
        class: usize,
        center: Vec<f64>,
        width: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    PredictedLabel,
    PredictiveDistribution,
    LatentClassMeans,
    ClassDataDistribution,
    LocalDecisionBoundary,
}

impl TargetKind {
    /// Targets describing generalization behaviour in data space. These
    /// pair with any explanation medium.
    pub fn is_behavioral(self) -> bool {
        !matches!(self, TargetKind::LatentClassMeans)
    }
}

impl TargetInference {
    pub fn label(label: usize) -> Self {
        TargetInference::PredictedLabel { label, point: None }
    }

    pub fn label_at(label: usize, point: Vec<f64>) -> Self {
        TargetInference::PredictedLabel {
            label,
            point: Some(point),
        }
    }

    pub fn kind(&self) -> TargetKind {
        match self {
            TargetInference::PredictedLabel { .. } => TargetKind::PredictedLabel,
            TargetInference::PredictiveDistribution { .. } => TargetKind::PredictiveDistribution,
            TargetInference::LatentClassMeans { .. } => TargetKind::LatentClassMeans,
            TargetInference::ClassDataDistribution { .. } => TargetKind::ClassDataDistribution,
            TargetInference::LocalDecisionBoundary { .. } => TargetKind::LocalDecisionBoundary,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetInference::PredictiveDistribution { distributions } => {
                for p in distributions {
                    let s: f64 = p.iter().sum();
                    if p.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidArgument(
                            "predictive distribution is not a probability vector".into(),
                        ));
                    }
                }
                Ok(())
            }
            TargetInference::LatentClassMeans { means } => {
                let dim = means.first().map(Vec::len).unwrap_or(0);
                if means.is_empty() || means.iter().any(|m| m.len() != dim) {
                    return Err(Error::InvalidArgument(
                        "latent class means must be non-empty and of equal dimension".into(),
                    ));
                }
                Ok(())
            }
            TargetInference::LocalDecisionBoundary { width, .. } if !(*width > 0.0) => Err(
                Error::InvalidArgument("neighbourhood width must be positive".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Weights and intercept of a linear surrogate `w . z + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Kernel-weighted coefficient of determination on the fitting probes.
    pub weighted_r2: f64,
}

impl LinearWeights {
    pub fn evaluate(&self, z: &[f64]) -> f64 {
        crate::math::dot(&self.weights, z) + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Explanation {
    /// Dataset row indices. Per-class selections are stored class by class,
    /// each group ascending.
    ExampleSet(Vec<usize>),
    /// Per-feature keep weight, 1 = shown, 0 = occluded.
    FeatureMask(Vec<f64>),
    SaliencyVector(SaliencyVector),
    LinearWeights(LinearWeights),
    SoftTree(SoftTree),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExplanationKind {
    ExampleSet,
    FeatureMask,
    SaliencyVector,
    LinearWeights,
    SoftTree,
}

/// Hashable identity of a discrete explanation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExplanationKey {
    Indices(Vec<usize>),
    Bits(Vec<bool>),
}

impl Explanation {
    pub fn kind(&self) -> ExplanationKind {
        match self {
            Explanation::ExampleSet(_) => ExplanationKind::ExampleSet,
            Explanation::FeatureMask(_) => ExplanationKind::FeatureMask,
            Explanation::SaliencyVector(_) => ExplanationKind::SaliencyVector,
            Explanation::LinearWeights(_) => ExplanationKind::LinearWeights,
            Explanation::SoftTree(_) => ExplanationKind::SoftTree,
        }
    }

    pub fn key(&self) -> Option<ExplanationKey> {
        match self {
            Explanation::ExampleSet(ix) => Some(ExplanationKey::Indices(ix.clone())),
            Explanation::FeatureMask(m) if m.iter().all(|&v| v == 0.0 || v == 1.0) => {
                Some(ExplanationKey::Bits(m.iter().map(|&v| v == 1.0).collect()))
            }
            _ => None,
        }
    }

    pub fn as_example_set(&self) -> Result<&[usize]> {
        match self {
            Explanation::ExampleSet(ix) => Ok(ix),
            other => Err(Error::InvalidArgument(format!(
                "expected an example set, got {:?}",
                other.kind()
            ))),
        }
    }

    pub fn as_mask(&self) -> Result<&[f64]> {
        match self {
            Explanation::FeatureMask(m) => Ok(m),
            other => Err(Error::InvalidArgument(format!(
                "expected a feature mask, got {:?}",
                other.kind()
            ))),
        }
    }
}
