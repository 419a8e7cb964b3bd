//! New explainers assembled from interchangeable parts: a target inference
//! kind, an explanation medium, a learner model and a teacher strategy.
//!
//! Compatibility is decided by two rules. Behavioural targets pair with any
//! medium. Latent class means are parameters of a PLDA model, so only a
//! PLDA learner can read them. Beyond that each learner accepts a fixed
//! set of target and medium kinds, and each strategy needs a space it can
//! search.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lime::{local_probes, weighted_ridge};
use super::soft_tree::{distill_tree, train_soft_tree, SoftTreeConfig, TreeFit};
use crate::error::{Error, Result};
use crate::learners::{
    KernelConfig, MaskedPredictionLearner, MmdLearner, NearestExampleLearner, PldaLearner, Probes,
    SurrogateLearner,
};
use crate::math::argmax;
use crate::models::{Classifier, Dataset, TargetModel};
use crate::teacher::{run_strategy, Strategy, StrategyDiagnostics};
use crate::teaching::{
    Explanation, ExplanationKind, ExplanationSpace, Learner, SpaceDescriptor, TargetInference,
    TargetKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerId {
    Plda,
    Mmd,
    MaskedPrediction,
    NearestExample,
    SurrogateFit,
}

impl LearnerId {
    pub const ALL: [LearnerId; 5] = [
        LearnerId::Plda,
        LearnerId::Mmd,
        LearnerId::MaskedPrediction,
        LearnerId::NearestExample,
        LearnerId::SurrogateFit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerId::Plda => "plda",
            LearnerId::Mmd => "mmd",
            LearnerId::MaskedPrediction => "masked-prediction",
            LearnerId::NearestExample => "nearest-example",
            LearnerId::SurrogateFit => "surrogate-fit",
        }
    }

    /// Target kinds the learner can score.
    pub fn targets(self) -> &'static [TargetKind] {
        match self {
            LearnerId::Plda => &[TargetKind::LatentClassMeans],
            LearnerId::Mmd => &[TargetKind::ClassDataDistribution],
            LearnerId::MaskedPrediction | LearnerId::NearestExample => {
                &[TargetKind::PredictedLabel]
            }
            LearnerId::SurrogateFit => &[
                TargetKind::LocalDecisionBoundary,
                TargetKind::PredictiveDistribution,
            ],
        }
    }

    /// Explanation media the learner can read.
    pub fn media(self) -> &'static [ExplanationKind] {
        match self {
            LearnerId::Plda | LearnerId::Mmd | LearnerId::NearestExample => {
                &[ExplanationKind::ExampleSet]
            }
            LearnerId::MaskedPrediction => &[ExplanationKind::FeatureMask],
            LearnerId::SurrogateFit => &[ExplanationKind::LinearWeights, ExplanationKind::SoftTree],
        }
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerId::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown learner '{s}'")))
    }
}

/// Strategies that can search a space of the given medium. Continuous
/// surrogate spaces are searched by optimization, which stands in for the
/// maximizing teacher.
pub fn strategies_for(medium: ExplanationKind) -> &'static [&'static str] {
    match medium {
        ExplanationKind::ExampleSet => &["exhaustive-max", "greedy", "mh-sample"],
        ExplanationKind::FeatureMask => &["exhaustive-max", "mh-sample", "mc-expectation"],
        ExplanationKind::LinearWeights | ExplanationKind::SoftTree => &["exhaustive-max"],
        ExplanationKind::SaliencyVector => &[],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recombination {
    pub theta: TargetKind,
    pub explanation: ExplanationKind,
    pub learner: LearnerId,
    pub strategy: Strategy,
}

/// Checks a combination against the compatibility rules and returns it as
/// a runnable explainer.
pub fn recombine(
    theta: TargetKind,
    explanation: ExplanationKind,
    learner: LearnerId,
    strategy: Strategy,
) -> Result<Recombination> {
    let reject = |why: String| Err(Error::IncompatibleCombination(why));
    if !theta.is_behavioral() && learner != LearnerId::Plda {
        return reject(format!(
            "{theta:?} are parameters of a PLDA model and can only be read by the plda learner, not {learner}"
        ));
    }
    if !learner.targets().contains(&theta) {
        return reject(format!(
            "learner {learner} scores {:?}, not {theta:?}",
            learner.targets()
        ));
    }
    if !learner.media().contains(&explanation) {
        return reject(format!(
            "learner {learner} reads {:?}, not {explanation:?}",
            learner.media()
        ));
    }
    if !strategies_for(explanation).contains(&strategy.name()) {
        return reject(format!(
            "strategy {} cannot search a {explanation:?} space (allowed: {:?})",
            strategy.name(),
            strategies_for(explanation)
        ));
    }
    Ok(Recombination {
        theta,
        explanation,
        learner,
        strategy,
    })
}

/// Knobs for the concrete explainers a recombination can build. Unused
/// fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecombineParams {
    /// Examples per class for example-set media.
    pub per_class: usize,
    /// Class the target inference is about; defaults to the model's label
    /// at the point.
    pub class: Option<usize>,
    pub keep_prob: f64,
    /// Fill value for occluded features; defaults to the dataset mean, or
    /// zeros without a dataset.
    pub baseline: Option<Vec<f64>>,
    /// Neighbourhood scale for local boundaries.
    pub width: f64,
    pub probes: usize,
    pub ridge: f64,
    pub tree: SoftTreeConfig,
    /// Neighbours per class for the nearest-example learner.
    pub neighbours: usize,
    /// Likelihood temperature for loss-based learners.
    pub temperature: f64,
}

impl Default for RecombineParams {
    fn default() -> Self {
        Self {
            per_class: 2,
            class: None,
            keep_prob: 0.5,
            baseline: None,
            width: 1.0,
            probes: 500,
            ridge: 1e-3,
            tree: SoftTreeConfig::default(),
            neighbours: 1,
            temperature: 1.0,
        }
    }
}

/// What a recombined explainer runs against.
#[derive(Debug, Clone, Copy)]
pub struct RecombineContext<'a> {
    pub model: &'a TargetModel,
    pub dataset: Option<&'a Dataset>,
    pub point: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecombineOutput {
    pub recombination: Recombination,
    pub theta: TargetInference,
    pub explanation: Explanation,
    /// Learner log likelihood of the explanation. Absent for expectations,
    /// which are not elements of the space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    pub diagnostics: StrategyDiagnostics,
}

fn need<'a, T: ?Sized>(v: Option<&'a T>, what: &str, r: &Recombination) -> Result<&'a T> {
    v.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} with {:?} needs {what}",
            r.learner, r.explanation
        ))
    })
}

impl Recombination {
    pub fn run(
        &self,
        ctx: &RecombineContext,
        params: &RecombineParams,
        seed: u64,
    ) -> Result<RecombineOutput> {
        let model = ctx.model;
        let target_class = |point: &[f64]| -> Result<usize> {
            match params.class {
                Some(c) if c < model.class_count() => Ok(c),
                Some(c) => Err(Error::InvalidArgument(format!("class {c} out of range"))),
                None => Ok(argmax(&model.predict_dist(point)?)),
            }
        };
        let per_class_space = |ds: &Dataset| -> Result<ExplanationSpace> {
            if params.per_class == 0 {
                return Err(Error::InvalidArgument(
                    "per-class count must be at least 1".into(),
                ));
            }
            let pools: Vec<Vec<usize>> = (0..ds.class_count).map(|c| ds.class_indices(c)).collect();
            for (c, p) in pools.iter().enumerate() {
                if p.len() < params.per_class {
                    return Err(Error::MissingClass(c));
                }
            }
            Ok(ExplanationSpace::uniform(
                SpaceDescriptor::PerClassSubsets {
                    pools,
                    size: params.per_class,
                },
            ))
        };
        let search = |learner: &dyn Learner, theta: TargetInference, space: &ExplanationSpace| {
            let out = run_strategy(learner, &theta, space, self.strategy, seed)?;
            let log_likelihood = match out.explanation {
                Explanation::SaliencyVector(_) => None,
                ref x => Some(learner.log_likelihood(&theta, x)?),
            };
            Ok(RecombineOutput {
                recombination: *self,
                theta,
                explanation: out.explanation,
                log_likelihood,
                diagnostics: out.diagnostics,
            })
        };

        match self.learner {
            LearnerId::Plda => {
                let ds = need(ctx.dataset, "a dataset", self)?;
                let plda = model.plda().ok_or_else(|| {
                    Error::InvalidArgument("the plda learner needs a PLDA target model".into())
                })?;
                let learner = PldaLearner::new(Arc::new(plda.clone()), Arc::new(ds.clone()));
                let theta = TargetInference::LatentClassMeans {
                    means: plda.class_means.clone(),
                };
                search(&learner, theta, &per_class_space(ds)?)
            }
            LearnerId::Mmd => {
                let ds = need(ctx.dataset, "a dataset", self)?;
                let class = params.class.ok_or_else(|| {
                    Error::InvalidArgument("the mmd learner needs a class".into())
                })?;
                let pool = ds.class_indices(class);
                if pool.len() < params.per_class.max(1) {
                    return Err(Error::MissingClass(class));
                }
                let reference: Vec<Vec<f64>> =
                    pool.iter().map(|&i| ds.features[i].clone()).collect();
                let learner = MmdLearner {
                    points: Arc::new(ds.features.clone()),
                    kernel: KernelConfig::median_heuristic(&reference)?,
                    temperature: params.temperature,
                };
                let theta = TargetInference::ClassDataDistribution { class, reference };
                let space = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
                    pool,
                    size: params.per_class.max(1),
                });
                search(&learner, theta, &space)
            }
            LearnerId::MaskedPrediction => {
                let point = need(ctx.point, "a point", self)?;
                let class = target_class(point)?;
                let baseline = match (&params.baseline, ctx.dataset) {
                    (Some(b), _) => b.clone(),
                    (None, Some(ds)) => ds.feature_mean(),
                    (None, None) => vec![0.0; point.len()],
                };
                let learner = MaskedPredictionLearner {
                    model: model.clone(),
                    point: point.to_vec(),
                    baseline,
                };
                let space = ExplanationSpace::masks(point.len(), params.keep_prob);
                search(&learner, TargetInference::label(class), &space)
            }
            LearnerId::NearestExample => {
                let ds = need(ctx.dataset, "a dataset", self)?;
                let point = need(ctx.point, "a point", self)?;
                let class = target_class(point)?;
                let learner = NearestExampleLearner {
                    dataset: Arc::new(ds.clone()),
                    kernel: KernelConfig::median_heuristic(&ds.features)?,
                    k: params.neighbours,
                };
                let theta = TargetInference::label_at(class, point.to_vec());
                search(&learner, theta, &per_class_space(ds)?)
            }
            LearnerId::SurrogateFit => self.fit_surrogate(ctx, params, seed, target_class),
        }
    }

    fn fit_surrogate(
        &self,
        ctx: &RecombineContext,
        params: &RecombineParams,
        seed: u64,
        target_class: impl Fn(&[f64]) -> Result<usize>,
    ) -> Result<RecombineOutput> {
        let model = ctx.model;
        let (theta, probes, explanation) = match self.theta {
            TargetKind::LocalDecisionBoundary => {
                let point = need(ctx.point, "a point", self)?;
                let class = target_class(point)?;
                let probes = local_probes(point, params.width, params.probes, seed)?;
                let dists = probes
                    .points
                    .iter()
                    .map(|p| model.predict_dist(p))
                    .collect::<Result<Vec<_>>>()?;
                let x = match self.explanation {
                    ExplanationKind::LinearWeights => {
                        let y: Vec<f64> = dists.iter().map(|d| d[class]).collect();
                        Explanation::LinearWeights(weighted_ridge(&probes, &y, params.ridge)?)
                    }
                    _ => {
                        let config = SoftTreeConfig {
                            fit: TreeFit::ClassProbability { class },
                            ..params.tree.clone()
                        };
                        let fit = train_soft_tree(
                            &probes.points,
                            &dists,
                            Some(&probes.weights),
                            &config,
                            seed,
                        )?;
                        Explanation::SoftTree(fit.tree)
                    }
                };
                let theta = TargetInference::LocalDecisionBoundary {
                    class,
                    center: point.to_vec(),
                    width: params.width,
                };
                (theta, probes, x)
            }
            _ => {
                let ds = need(ctx.dataset, "a dataset", self)?;
                let distributions = ds
                    .features
                    .iter()
                    .map(|p| model.predict_dist(p))
                    .collect::<Result<Vec<_>>>()?;
                let probes = Probes::uniform(ds.features.clone());
                let x = match self.explanation {
                    ExplanationKind::LinearWeights => {
                        if model.class_count() != 2 {
                            return Err(Error::IncompatibleCombination(
                                "a linear surrogate can only carry a two-class predictive distribution".into(),
                            ));
                        }
                        let y: Vec<f64> = distributions.iter().map(|d| d[1]).collect();
                        Explanation::LinearWeights(weighted_ridge(&probes, &y, params.ridge)?)
                    }
                    _ => {
                        let config = SoftTreeConfig {
                            fit: TreeFit::Distribution,
                            ..params.tree.clone()
                        };
                        Explanation::SoftTree(distill_tree(model, ds, &config, seed)?.tree)
                    }
                };
                (
                    TargetInference::PredictiveDistribution { distributions },
                    probes,
                    x,
                )
            }
        };
        let learner = SurrogateLearner {
            target: model.clone(),
            probes,
            temperature: params.temperature,
        };
        let log_likelihood = learner.log_likelihood(&theta, &explanation)?;
        Ok(RecombineOutput {
            recombination: *self,
            theta,
            explanation,
            log_likelihood: Some(log_likelihood),
            diagnostics: StrategyDiagnostics {
                log_weight: Some(log_likelihood),
                evaluations: 1,
                ..Default::default()
            },
        })
    }
}
