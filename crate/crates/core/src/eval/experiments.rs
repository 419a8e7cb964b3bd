//! Canned simulated experiments built on the forced-choice harness.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::ranks::{rank_order_independence, RankReport};
use super::study::{simulate_2afc, Member, Question, SimulatedStudy, StudyReport, Task};
use crate::error::{Error, Result};
use crate::explainers::{explain_by_examples, ExampleConfig, ExampleSelection, ExampleStrategy};
use crate::learners::{
    belief_over_candidates, BiasConfig, KernelConfig, NearestExampleLearner, PldaLearner,
};
use crate::math::argmax;
use crate::models::{Classifier, Dataset, TargetModel};
use crate::rng;
use crate::teacher::{empirical_mode, run_strategy, Strategy};
use crate::teaching::{Explanation, ExplanationSpace, Learner, TableLearner, TargetInference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExampleStudyConfig {
    pub per_class: usize,
    pub strategy: ExampleStrategy,
    pub trials: usize,
    /// Random same-shape sets for the baseline and the likelihood
    /// percentile.
    pub random_sets: usize,
    /// Neighbours per class for the simulated explainee.
    pub neighbours: usize,
}

impl Default for ExampleStudyConfig {
    fn default() -> Self {
        Self {
            per_class: 2,
            strategy: ExampleStrategy::ExhaustiveMax,
            trials: 2000,
            random_sets: 1000,
            neighbours: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleStudyReport {
    pub selection: ExampleSelection,
    pub teacher_accuracy: f64,
    pub random_accuracy: f64,
    pub accuracy_gain: f64,
    /// Share of random sets whose PLDA log likelihood is at most the
    /// teacher's.
    pub likelihood_percentile: f64,
    pub random_log_likelihood_q99: f64,
    pub study: StudyReport,
}

/// A random `per_class` subset of every class, laid out like a teacher
/// selection.
pub fn random_example_set(dataset: &Dataset, per_class: usize, seed: u64) -> Result<Explanation> {
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(per_class * dataset.class_count);
    for c in 0..dataset.class_count {
        let pool = dataset.class_indices(c);
        if pool.len() < per_class {
            return Err(Error::MissingClass(c));
        }
        let mut pick: Vec<usize> = sample(&mut r, pool.len(), per_class)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        pick.sort_unstable();
        out.extend(pick);
    }
    Ok(Explanation::ExampleSet(out))
}

/// Forced-choice questions asking which of two labels the model gives each
/// query: its own label and a uniformly drawn other one.
pub fn label_questions<C: Classifier + ?Sized>(
    model: &C,
    queries: &[Vec<f64>],
    explanations: &[Explanation],
    seed: u64,
) -> Result<Vec<Question>> {
    let classes = model.class_count();
    if classes < 2 {
        return Err(Error::InvalidArgument(
            "forced choice needs at least two classes".into(),
        ));
    }
    if explanations.is_empty() || queries.is_empty() {
        return Err(Error::InvalidArgument(
            "need queries and explanations".into(),
        ));
    }
    queries
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let label = argmax(&model.predict_dist(q)?);
            let mut other = rng::stream(seed, i as u64).random_range(0..classes - 1);
            if other >= label {
                other += 1;
            }
            Ok(Question {
                candidates: vec![
                    TargetInference::label_at(label, q.clone()),
                    TargetInference::label_at(other, q.clone()),
                ],
                correct: 0,
                x: explanations[i % explanations.len()].clone(),
            })
        })
        .collect()
}

fn nearest_member(dataset: &Dataset, k: usize) -> Result<Member> {
    Ok(Member {
        learner: Arc::new(NearestExampleLearner {
            dataset: Arc::new(dataset.clone()),
            kernel: KernelConfig::median_heuristic(&dataset.features)?,
            k,
        }),
        bias: BiasConfig::none(),
        weight: 1.0,
    })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// The teacher's selection, the random baseline sets, and one forced-choice
/// task for each.
fn example_tasks(
    model: &TargetModel,
    dataset: &Dataset,
    queries: &[Vec<f64>],
    config: &ExampleStudyConfig,
    seed: u64,
) -> Result<(ExampleSelection, Vec<Explanation>, Vec<Task>)> {
    if config.random_sets == 0 || config.trials == 0 {
        return Err(Error::InvalidArgument(
            "need at least one trial and one random set".into(),
        ));
    }
    let selection = explain_by_examples(
        model,
        dataset,
        &ExampleConfig {
            per_class: config.per_class,
            strategy: config.strategy,
            coupling: Default::default(),
        },
        rng::derive(seed, 0),
    )?;
    let random: Vec<Explanation> = (0..config.random_sets)
        .map(|j| {
            random_example_set(
                dataset,
                config.per_class,
                rng::derive(rng::derive(seed, 1), j as u64),
            )
        })
        .collect::<Result<_>>()?;
    let question_seed = rng::derive(seed, 2);
    let tasks = vec![
        Task {
            name: "teacher".into(),
            questions: label_questions(
                model,
                queries,
                std::slice::from_ref(&selection.explanation),
                question_seed,
            )?,
            trials: config.trials,
        },
        Task {
            name: "random".into(),
            questions: label_questions(model, queries, &random, question_seed)?,
            trials: config.trials,
        },
    ];
    Ok((selection, random, tasks))
}

/// Teacher-selected PLDA examples against random same-shape sets: forced
/// choice accuracy of a nearest-example explainee on `queries`, and where
/// the teacher's set falls among the random sets by learner likelihood.
pub fn example_selection_study(
    model: &TargetModel,
    dataset: &Dataset,
    queries: &[Vec<f64>],
    config: &ExampleStudyConfig,
    seed: u64,
) -> Result<ExampleStudyReport> {
    let (selection, random, tasks) = example_tasks(model, dataset, queries, config, seed)?;
    let plda = model.plda().expect("checked by explain_by_examples");
    let plda_learner = PldaLearner::new(Arc::new(plda.clone()), Arc::new(dataset.clone()));
    let mut random_ll = random
        .iter()
        .map(|x| plda_learner.log_likelihood(&selection.theta, x))
        .collect::<Result<Vec<f64>>>()?;
    let at_most = random_ll
        .iter()
        .filter(|&&l| l <= selection.log_likelihood)
        .count();
    random_ll.sort_by(f64::total_cmp);

    let study = SimulatedStudy {
        population: vec![nearest_member(dataset, config.neighbours)?],
        tasks,
        seed: rng::derive(seed, 3),
    };
    let report = simulate_2afc(&study)?;
    let (teacher_accuracy, random_accuracy) = (report.tasks[0].accuracy, report.tasks[1].accuracy);
    Ok(ExampleStudyReport {
        selection,
        teacher_accuracy,
        random_accuracy,
        accuracy_gain: teacher_accuracy - random_accuracy,
        likelihood_percentile: at_most as f64 / random_ll.len() as f64,
        random_log_likelihood_q99: quantile(&random_ll, 0.99),
        study: report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStudyReport {
    pub sizes: Vec<usize>,
    pub teacher_accuracy: Vec<f64>,
    pub random_accuracy: Vec<f64>,
    /// Rows teacher and random, one column per size.
    pub ranks: RankReport,
}

/// The example-selection study repeated for several per-class sizes.
pub fn example_size_study(
    model: &TargetModel,
    dataset: &Dataset,
    queries: &[Vec<f64>],
    sizes: &[usize],
    config: &ExampleStudyConfig,
    seed: u64,
) -> Result<SizeStudyReport> {
    let mut teacher = Vec::new();
    let mut random = Vec::new();
    for (i, &k) in sizes.iter().enumerate() {
        let cfg = ExampleStudyConfig {
            per_class: k,
            ..config.clone()
        };
        let r =
            example_selection_study(model, dataset, queries, &cfg, rng::derive(seed, i as u64))?;
        teacher.push(r.teacher_accuracy);
        random.push(r.random_accuracy);
    }
    let ranks = rank_order_independence(&[teacher.clone(), random.clone()])?;
    Ok(SizeStudyReport {
        sizes: sizes.to_vec(),
        teacher_accuracy: teacher,
        random_accuracy: random,
        ranks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedBiasReport {
    pub unbiased: StudyReport,
    pub biased: StudyReport,
    /// Per task, biased minus unbiased accuracy.
    pub accuracy_difference: Vec<f64>,
}

/// The same tasks and tie-breaking coins, once for `learner` and once for
/// its biased version.
pub fn paired_bias_study(
    learner: Arc<dyn Learner>,
    bias: BiasConfig,
    tasks: Vec<Task>,
    seed: u64,
) -> Result<PairedBiasReport> {
    let run = |b: BiasConfig| {
        simulate_2afc(&SimulatedStudy {
            population: vec![Member {
                learner: learner.clone(),
                bias: b,
                weight: 1.0,
            }],
            tasks: tasks.clone(),
            seed,
        })
    };
    let unbiased = run(BiasConfig::none())?;
    let biased = run(bias)?;
    let accuracy_difference = biased
        .tasks
        .iter()
        .zip(&unbiased.tasks)
        .map(|(b, u)| b.accuracy - u.accuracy)
        .collect();
    Ok(PairedBiasReport {
        unbiased,
        biased,
        accuracy_difference,
    })
}

/// The example-selection tasks answered by an unbiased nearest-example
/// explainee and by one with a wrong prior on every question.
pub fn example_bias_study(
    model: &TargetModel,
    dataset: &Dataset,
    queries: &[Vec<f64>],
    config: &ExampleStudyConfig,
    strength: f64,
    wrong_mass: f64,
    seed: u64,
) -> Result<PairedBiasReport> {
    let (_, _, tasks) = example_tasks(model, dataset, queries, config, seed)?;
    let questions: Vec<Question> = tasks
        .iter()
        .flat_map(|t| t.questions.iter().cloned())
        .collect();
    let bias = wrong_prior_bias(&questions, strength, wrong_mass)?;
    let member = nearest_member(dataset, config.neighbours)?;
    paired_bias_study(member.learner, bias, tasks, rng::derive(seed, 3))
}

/// A confirmation bias that, for every question, leans towards the wrong
/// candidates: each wrong candidate gets `wrong_mass` times the belief of
/// the correct one.
pub fn wrong_prior_bias(
    questions: &[Question],
    strength: f64,
    wrong_mass: f64,
) -> Result<BiasConfig> {
    if !(wrong_mass >= 1.0 && wrong_mass.is_finite()) {
        return Err(Error::InvalidArgument(
            "a wrong prior must favour the wrong candidates (mass >= 1)".into(),
        ));
    }
    let mut candidates = Vec::new();
    let mut belief = Vec::new();
    for q in questions {
        for (i, c) in q.candidates.iter().enumerate() {
            if !candidates.contains(c) {
                candidates.push(c.clone());
                belief.push(if i == q.correct { 1.0 } else { wrong_mass });
            }
        }
    }
    let total: f64 = belief.iter().sum();
    Ok(BiasConfig {
        confirmation_strength: strength,
        candidates,
        prior_belief: belief.iter().map(|b| b / total).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyComparison {
    pub max_explanation: Explanation,
    /// Evaluator belief in the target after the maximizing explanation.
    pub max_score: f64,
    /// Mean evaluator belief over the Metropolis draws.
    pub sampled_mean_score: f64,
    pub sampling_better: bool,
    /// Most frequent draw.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_mode: Option<Explanation>,
    pub acceptance_rate: f64,
}

/// Selects with `selector` by maximization and by Metropolis sampling, then
/// scores both choices by `evaluator`'s normalized belief in
/// `candidates[target]`.
#[allow(clippy::too_many_arguments)]
pub fn strategy_comparison(
    selector: &dyn Learner,
    evaluator: &dyn Learner,
    candidates: &[TargetInference],
    target: usize,
    space: &ExplanationSpace,
    n: usize,
    burn_in: usize,
    seed: u64,
) -> Result<StrategyComparison> {
    let theta = candidates
        .get(target)
        .ok_or_else(|| Error::InvalidArgument(format!("target {target} out of range")))?;
    let score = |x: &Explanation| -> Result<f64> {
        Ok(belief_over_candidates(evaluator, candidates, x)?[target])
    };
    let max = run_strategy(selector, theta, space, Strategy::ExhaustiveMax, seed)?;
    let sampled = run_strategy(
        selector,
        theta,
        space,
        Strategy::MhSample { n, burn_in },
        seed,
    )?;
    let max_score = score(&max.explanation)?;
    let mut cache: std::collections::HashMap<_, f64> = std::collections::HashMap::new();
    let mut total = 0.0;
    for x in &sampled.samples {
        let key = x.key();
        let s = match key.as_ref().and_then(|k| cache.get(k)) {
            Some(&s) => s,
            None => {
                let s = score(x)?;
                if let Some(k) = key {
                    cache.insert(k, s);
                }
                s
            }
        };
        total += s;
    }
    let sampled_mean_score = total / sampled.samples.len() as f64;
    Ok(StrategyComparison {
        max_explanation: max.explanation,
        max_score,
        sampled_mean_score,
        sampling_better: sampled_mean_score > max_score,
        sampled_mode: empirical_mode(&sampled.samples),
        acceptance_rate: sampled.diagnostics.acceptance_rate.unwrap_or(0.0),
    })
}

/// Selector, evaluator, candidate targets and explanation space.
pub type MismatchFixture = (
    TableLearner,
    Arc<dyn Learner>,
    Vec<TargetInference>,
    ExplanationSpace,
);

/// Selector and evaluator disagree about one explanation: the selector's
/// favourite also supports a rival target, which an evaluator leaning
/// towards the rival (belief `rival_belief`, confirmation strength 1)
/// cannot ignore. Returns (selector, evaluator, candidates, space).
pub fn mismatch_fixture(rival_belief: f64) -> Result<MismatchFixture> {
    let items: Vec<Explanation> = (0..5).map(|i| Explanation::ExampleSet(vec![i])).collect();
    let candidates = vec![TargetInference::label(0), TargetInference::label(1)];
    let selector = TableLearner {
        targets: candidates.clone(),
        keys: items.iter().map(|x| x.key().expect("discrete")).collect(),
        table: vec![
            vec![0.9, 0.8, 0.8, 0.8, 0.8],
            vec![0.9, 0.05, 0.05, 0.05, 0.05],
        ],
    };
    let bias = BiasConfig {
        confirmation_strength: 1.0,
        candidates: candidates.clone(),
        prior_belief: vec![1.0 - rival_belief, rival_belief],
    };
    let evaluator: Arc<dyn Learner> =
        Arc::new(crate::learners::biased_learner(selector.clone(), bias)?);
    Ok((
        selector,
        evaluator,
        candidates,
        ExplanationSpace::listed(items, None),
    ))
}
