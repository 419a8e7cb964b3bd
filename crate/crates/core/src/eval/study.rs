//! Simulated forced-choice studies: a population of formal explainees sees
//! an explanation and picks the target inference it finds most likely.

use std::sync::Arc;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ranks::{rank_order_independence, RankReport};
use crate::error::{Error, Result};
use crate::learners::{belief_over_candidates, biased_learner, BiasConfig};
use crate::rng;
use crate::teaching::{Explanation, Learner, TargetInference};

pub const CALIBRATION_BINS: usize = 10;

/// One simulated explainee type and its share of the population.
#[derive(Clone)]
pub struct Member {
    pub learner: Arc<dyn Learner>,
    pub bias: BiasConfig,
    pub weight: f64,
}

/// One forced-choice question: which candidate is the target, after
/// seeing `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub candidates: Vec<TargetInference>,
    /// Index of the true target among the candidates.
    pub correct: usize,
    pub x: Explanation,
}

/// Trial `t` asks question `t % questions.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub name: String,
    pub questions: Vec<Question>,
    pub trials: usize,
}

#[derive(Clone)]
pub struct SimulatedStudy {
    pub population: Vec<Member>,
    pub tasks: Vec<Task>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    /// Population weight of the trials that fell in the bin, in trials.
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_confidence: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub name: String,
    pub trials: usize,
    /// Population-weighted share of correct choices.
    pub accuracy: f64,
    /// Per member, in population order.
    pub member_accuracy: Vec<f64>,
    /// Belief in the true target after the explanation minus the uniform
    /// starting belief, averaged over trials and the population.
    pub belief_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub seed: u64,
    /// SHA-256 of the canonical study description.
    pub config_hash: String,
    pub members: Vec<String>,
    pub tasks: Vec<TaskResult>,
    /// Confidence is the chooser's belief in the candidate it picked.
    pub calibration: Vec<CalibrationBin>,
    /// Member-by-task accuracy and whether members rank the same way under
    /// every task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_table: Option<RankReport>,
}

impl SimulatedStudy {
    pub fn validate(&self) -> Result<()> {
        if self.population.is_empty() {
            return Err(Error::InvalidArgument("study population is empty".into()));
        }
        let total: f64 = self.population.iter().map(|m| m.weight).sum();
        if self.population.iter().any(|m| !(m.weight >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(
                "population weights must sum to 1".into(),
            ));
        }
        for t in &self.tasks {
            if t.questions.is_empty() || t.trials == 0 {
                return Err(Error::InvalidArgument(format!(
                    "task '{}' has no trials",
                    t.name
                )));
            }
            for q in &t.questions {
                if q.candidates.len() < 2 || q.correct >= q.candidates.len() {
                    return Err(Error::InvalidArgument(format!(
                        "task '{}' needs at least two candidates and a valid answer",
                        t.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Hash of everything that determines the report.
    pub fn config_hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Canon<'a> {
            seed: u64,
            members: Vec<(&'a str, &'a BiasConfig, f64)>,
            tasks: &'a [Task],
        }
        let canon = Canon {
            seed: self.seed,
            members: self
                .population
                .iter()
                .map(|m| (m.learner.id(), &m.bias, m.weight))
                .collect(),
            tasks: &self.tasks,
        };
        let bytes = serde_json::to_vec(&canon)?;
        Ok(Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect())
    }
}

/// Per question: the tied-best candidates and the belief in each.
struct Answer {
    best: Vec<usize>,
    belief: Vec<f64>,
}

fn answer(learner: &dyn Learner, q: &Question) -> Result<Answer> {
    let logs = q
        .candidates
        .iter()
        .map(|t| learner.log_likelihood(t, &q.x))
        .collect::<Result<Vec<f64>>>()?;
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = if top == f64::NEG_INFINITY {
        (0..logs.len()).collect()
    } else {
        (0..logs.len()).filter(|&i| logs[i] == top).collect()
    };
    let belief = match belief_over_candidates(learner, &q.candidates, &q.x) {
        Ok(b) => b,
        Err(Error::AllZeroMass) => vec![1.0 / logs.len() as f64; logs.len()],
        Err(e) => return Err(e),
    };
    Ok(Answer { best, belief })
}

fn bin_of(confidence: f64) -> usize {
    ((confidence * CALIBRATION_BINS as f64) as usize).min(CALIBRATION_BINS - 1)
}

/// Runs every task against every member. Each trial the member picks the
/// candidate with the highest biased likelihood; ties are broken by a coin
/// seeded from `(seed, task, member, trial)`.
pub fn simulate_2afc(study: &SimulatedStudy) -> Result<StudyReport> {
    study.validate()?;
    let learners: Vec<Arc<dyn Learner>> = study
        .population
        .iter()
        .map(|m| -> Result<Arc<dyn Learner>> {
            Ok(Arc::new(biased_learner(m.learner.clone(), m.bias.clone())?))
        })
        .collect::<Result<_>>()?;

    let mut calib = vec![(0.0, 0.0, 0.0); CALIBRATION_BINS];
    let mut tasks = Vec::with_capacity(study.tasks.len());
    for (ti, task) in study.tasks.iter().enumerate() {
        let task_seed = rng::derive(study.seed, ti as u64);
        let mut member_accuracy = Vec::with_capacity(learners.len());
        let mut accuracy = 0.0;
        let mut belief_shift = 0.0;
        for (mi, (learner, member)) in learners.iter().zip(&study.population).enumerate() {
            let answers = task
                .questions
                .par_iter()
                .map(|q| answer(learner.as_ref(), q))
                .collect::<Result<Vec<_>>>()?;
            let member_seed = rng::derive(task_seed, mi as u64);
            let outcomes: Vec<(bool, f64, f64)> = (0..task.trials)
                .into_par_iter()
                .map(|t| {
                    let qi = t % task.questions.len();
                    let (q, a) = (&task.questions[qi], &answers[qi]);
                    let pick = if a.best.len() == 1 {
                        a.best[0]
                    } else {
                        a.best[rng::stream(member_seed, t as u64).random_range(0..a.best.len())]
                    };
                    let shift = a.belief[q.correct] - 1.0 / q.candidates.len() as f64;
                    (pick == q.correct, a.belief[pick], shift)
                })
                .collect();
            let n = task.trials as f64;
            let hits = outcomes.iter().filter(|o| o.0).count() as f64;
            member_accuracy.push(hits / n);
            accuracy += member.weight * hits / n;
            belief_shift += member.weight * outcomes.iter().map(|o| o.2).sum::<f64>() / n;
            for &(hit, conf, _) in &outcomes {
                let b = &mut calib[bin_of(conf)];
                b.0 += member.weight;
                b.1 += member.weight * conf;
                b.2 += if hit { member.weight } else { 0.0 };
            }
        }
        tasks.push(TaskResult {
            name: task.name.clone(),
            trials: task.trials,
            accuracy,
            member_accuracy,
            belief_shift,
        });
    }

    let calibration = calib
        .iter()
        .enumerate()
        .map(|(i, &(w, c, h))| CalibrationBin {
            lower: i as f64 / CALIBRATION_BINS as f64,
            upper: (i + 1) as f64 / CALIBRATION_BINS as f64,
            weight: w,
            mean_confidence: (w > 0.0).then(|| c / w),
            accuracy: (w > 0.0).then(|| h / w),
        })
        .collect();
    let rank_table = if learners.len() >= 2 && tasks.len() >= 2 {
        let table: Vec<Vec<f64>> = (0..learners.len())
            .map(|m| tasks.iter().map(|t| t.member_accuracy[m]).collect())
            .collect();
        Some(rank_order_independence(&table)?)
    } else {
        None
    };
    Ok(StudyReport {
        seed: study.seed,
        config_hash: study.config_hash()?,
        members: learners.iter().map(|l| l.id().to_string()).collect(),
        tasks,
        calibration,
        rank_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::teaching::{ConstantLearner, TableLearner};

    fn labels() -> Vec<TargetInference> {
        vec![TargetInference::label(0), TargetInference::label(1)]
    }

    fn one_task(trials: usize) -> Task {
        Task {
            name: "t".into(),
            questions: vec![Question {
                candidates: labels(),
                correct: 1,
                x: Explanation::ExampleSet(vec![0]),
            }],
            trials,
        }
    }

    #[test]
    fn uninformative_explanations_give_chance() {
        let study = SimulatedStudy {
            population: vec![Member {
                learner: Arc::new(ConstantLearner { value: 0.3 }),
                bias: BiasConfig::none(),
                weight: 1.0,
            }],
            tasks: vec![one_task(10_000)],
            seed: 11,
        };
        let r = simulate_2afc(&study).unwrap();
        assert!(
            (r.tasks[0].accuracy - 0.5).abs() < 0.02,
            "{}",
            r.tasks[0].accuracy
        );
        assert_eq!(r.tasks[0].belief_shift, 0.0);
        assert!(r.calibration[5].weight > 0.0);
    }

    #[test]
    fn informative_learner_is_always_right() {
        let table = TableLearner {
            targets: labels(),
            keys: vec![Explanation::ExampleSet(vec![0]).key().unwrap()],
            table: vec![vec![0.1], vec![0.9]],
        };
        let study = SimulatedStudy {
            population: vec![Member {
                learner: Arc::new(table),
                bias: BiasConfig::none(),
                weight: 1.0,
            }],
            tasks: vec![one_task(50)],
            seed: 0,
        };
        let r = simulate_2afc(&study).unwrap();
        assert_eq!(r.tasks[0].accuracy, 1.0);
        assert!((r.tasks[0].belief_shift - 0.4).abs() < 1e-12);
        assert_eq!(r.calibration[9].accuracy, Some(1.0));
    }

    #[test]
    fn weights_must_sum_to_one() {
        let study = SimulatedStudy {
            population: vec![Member {
                learner: Arc::new(ConstantLearner { value: 1.0 }),
                bias: BiasConfig::none(),
                weight: 0.5,
            }],
            tasks: vec![one_task(1)],
            seed: 0,
        };
        assert!(simulate_2afc(&study).is_err());
    }

    #[test]
    fn same_seed_same_report() {
        let study = SimulatedStudy {
            population: vec![Member {
                learner: Arc::new(ConstantLearner { value: 1.0 }),
                bias: BiasConfig::none(),
                weight: 1.0,
            }],
            tasks: vec![one_task(300)],
            seed: 5,
        };
        assert_eq!(
            simulate_2afc(&study).unwrap(),
            simulate_2afc(&study).unwrap()
        );
    }
}
