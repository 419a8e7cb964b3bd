//! Explanation by examples: PLDA-guided example sets and MMD prototypes
//! with criticisms.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{witness, KernelConfig, PldaLearner};
use crate::models::{Dataset, TargetModel};
use crate::teacher::{empirical_mode, run_strategy, Strategy};
use crate::teaching::{Explanation, ExplanationSpace, Learner, SpaceDescriptor, TargetInference};

/// How per-class selections relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassCoupling {
    /// One teaching problem over the product of per-class subsets.
    #[default]
    Joint,
    /// A separate teaching problem per class, other classes held at their
    /// first `k` members. The learner's score is a sum of per-class terms,
    /// so this reaches the same maximizer at a fraction of the cost.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExampleStrategy {
    ExhaustiveMax,
    Greedy,
    /// Mode of a Metropolis run.
    Mh {
        n: usize,
        burn_in: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub per_class: usize,
    pub strategy: ExampleStrategy,
    #[serde(default)]
    pub coupling: ClassCoupling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSelection {
    pub theta: TargetInference,
    pub explanation: Explanation,
    /// Learner log likelihood of the selection.
    pub log_likelihood: f64,
    /// Teacher probability of the selection, when the whole space was
    /// normalized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posterior_mass: Option<f64>,
    /// Number of candidate sets in the teaching space.
    pub space_size: f64,
}

fn to_strategy(s: ExampleStrategy) -> Strategy {
    match s {
        ExampleStrategy::ExhaustiveMax => Strategy::ExhaustiveMax,
        ExampleStrategy::Greedy => Strategy::Greedy,
        ExampleStrategy::Mh { n, burn_in } => Strategy::MhSample { n, burn_in },
    }
}

fn pick<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
    strategy: ExampleStrategy,
    seed: u64,
) -> Result<(Explanation, Option<f64>)> {
    let out = run_strategy(learner, theta, space, to_strategy(strategy), seed)?;
    match strategy {
        ExampleStrategy::Mh { .. } => Ok((
            empirical_mode(&out.samples).ok_or(Error::EmptyPosterior)?,
            None,
        )),
        _ => Ok((out.explanation, out.diagnostics.posterior_mass)),
    }
}

/// Picks `per_class` training examples from every class that best convey a
/// PLDA target's latent class means to a PLDA-minded explainee.
pub fn explain_by_examples(
    model: &TargetModel,
    dataset: &Dataset,
    config: &ExampleConfig,
    seed: u64,
) -> Result<ExampleSelection> {
    let params = model.plda().ok_or_else(|| {
        Error::InvalidArgument("example selection needs a PLDA target model".into())
    })?;
    if config.per_class == 0 {
        return Err(Error::InvalidArgument(
            "per-class count must be at least 1".into(),
        ));
    }
    if dataset.class_count != params.class_means.len() {
        return Err(Error::InvalidArgument(
            "dataset and model disagree on the class count".into(),
        ));
    }
    let pools: Vec<Vec<usize>> = (0..dataset.class_count)
        .map(|c| dataset.class_indices(c))
        .collect();
    for (c, p) in pools.iter().enumerate() {
        if p.len() < config.per_class {
            return Err(Error::MissingClass(c));
        }
    }
    let theta = TargetInference::LatentClassMeans {
        means: params.class_means.clone(),
    };
    let learner = PldaLearner::new(Arc::new(params.clone()), Arc::new(dataset.clone()));
    let joint = ExplanationSpace::uniform(SpaceDescriptor::PerClassSubsets {
        pools: pools.clone(),
        size: config.per_class,
    });
    let space_size = joint.size().map(|s| s as f64).unwrap_or(f64::INFINITY);

    let (explanation, posterior_mass) = match config.coupling {
        ClassCoupling::Joint => pick(&learner, &theta, &joint, config.strategy, seed)?,
        ClassCoupling::Independent => {
            let mut chosen: Vec<Vec<usize>> = pools
                .iter()
                .map(|p| p[..config.per_class].to_vec())
                .collect();
            let mut mass = Some(1.0);
            for c in 0..pools.len() {
                let mut fixed = pools.clone();
                for (o, f) in fixed.iter_mut().enumerate() {
                    if o != c {
                        *f = chosen[o].clone();
                    }
                }
                let space = ExplanationSpace::uniform(SpaceDescriptor::PerClassSubsets {
                    pools: fixed,
                    size: config.per_class,
                });
                let (x, m) = pick(
                    &learner,
                    &theta,
                    &space,
                    config.strategy,
                    crate::rng::derive(seed, c as u64),
                )?;
                mass = mass.zip(m).map(|(a, b)| a * b);
                let set = x.as_example_set()?;
                chosen[c] = set[c * config.per_class..(c + 1) * config.per_class].to_vec();
            }
            (Explanation::ExampleSet(chosen.concat()), mass)
        }
    };
    let log_likelihood = learner.log_likelihood(&theta, &explanation)?;
    Ok(ExampleSelection {
        theta,
        explanation,
        log_likelihood,
        posterior_mass,
        space_size,
    })
}

/// Kernel sums behind the greedy prototype objective.
pub struct PrototypeObjective {
    gram: Vec<Vec<f64>>,
    /// `sum_j k(x_i, x_j)` over the whole dataset.
    data_sums: Vec<f64>,
    data_total: f64,
}

impl PrototypeObjective {
    pub fn new(points: &[Vec<f64>], kernel: &KernelConfig) -> Self {
        let n = points.len();
        let mut gram = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(&points[i], &points[j]);
                gram[i][j] = v;
                gram[j][i] = v;
            }
        }
        let data_sums: Vec<f64> = gram.iter().map(|r| r.iter().sum()).collect();
        let data_total = data_sums.iter().sum();
        Self {
            gram,
            data_sums,
            data_total,
        }
    }

    fn objective_from_sums(&self, size: usize, within: f64, cross: f64) -> f64 {
        let n = self.gram.len() as f64;
        let m = size as f64;
        (within / (m * m) + self.data_total / (n * n) - 2.0 * cross / (n * m)).max(0.0)
    }

    /// `mmd2(points[set], points)`.
    pub fn value(&self, set: &[usize]) -> f64 {
        let within: f64 = set
            .iter()
            .map(|&i| set.iter().map(|&j| self.gram[i][j]).sum::<f64>())
            .sum();
        let cross: f64 = set.iter().map(|&i| self.data_sums[i]).sum();
        self.objective_from_sums(set.len(), within, cross)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSelection {
    /// Indices in the order they were added.
    pub prototypes: Vec<usize>,
    /// Discrepancy after each addition.
    pub trace: Vec<f64>,
}

/// Greedy forward selection of `m` prototypes minimizing the discrepancy
/// to the full set; ties go to the lowest index.
pub fn mmd_prototypes(
    points: &[Vec<f64>],
    m: usize,
    kernel: &KernelConfig,
) -> Result<PrototypeSelection> {
    let n = points.len();
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "prototype count must be in 1..={n}, got {m}"
        )));
    }
    let obj = PrototypeObjective::new(points, kernel);
    let mut chosen = Vec::with_capacity(m);
    let mut taken = vec![false; n];
    // sum over chosen i of k(i, j), for every j
    let mut to_chosen = vec![0.0; n];
    let mut within = 0.0;
    let mut cross = 0.0;
    let mut trace = Vec::with_capacity(m);
    for _ in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if taken[j] {
                continue;
            }
            let w = within + 2.0 * to_chosen[j] + obj.gram[j][j];
            let v = obj.objective_from_sums(chosen.len() + 1, w, cross + obj.data_sums[j]);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((j, v));
            }
        }
        let (j, v) = best.expect("a free candidate remains");
        within += 2.0 * to_chosen[j] + obj.gram[j][j];
        cross += obj.data_sums[j];
        for (t, g) in to_chosen.iter_mut().zip(&obj.gram[j]) {
            *t += g;
        }
        taken[j] = true;
        chosen.push(j);
        trace.push(v);
    }
    Ok(PrototypeSelection {
        prototypes: chosen,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criticism {
    pub index: usize,
    pub witness: f64,
}

/// The `c` non-prototype points with the largest absolute witness value.
pub fn mmd_criticisms(
    points: &[Vec<f64>],
    prototypes: &[usize],
    c: usize,
    kernel: &KernelConfig,
) -> Result<Vec<Criticism>> {
    let available = points.len().saturating_sub(prototypes.len());
    if c == 0 || c > available {
        return Err(Error::InvalidArgument(format!(
            "criticism count must be in 1..={available}, got {c}"
        )));
    }
    if prototypes.is_empty() || prototypes.iter().any(|&p| p >= points.len()) {
        return Err(Error::InvalidArgument(
            "prototype indices out of range".into(),
        ));
    }
    let protos: Vec<Vec<f64>> = prototypes.iter().map(|&i| points[i].clone()).collect();
    let mut scored: Vec<Criticism> = (0..points.len())
        .filter(|i| !prototypes.contains(i))
        .map(|i| Criticism {
            index: i,
            witness: witness(&points[i], points, &protos, kernel),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.witness
            .abs()
            .total_cmp(&a.witness.abs())
            .then(a.index.cmp(&b.index))
    });
    scored.truncate(c);
    Ok(scored)
}
