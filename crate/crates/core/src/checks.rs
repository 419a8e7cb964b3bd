//! Randomized cross-checks of the engine against the brute-force oracles.
//! Each check reports the worst disagreement it saw and whether that stays
//! inside its tolerance.

use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explainers::{kernel_shap, Coalitions};
use crate::learners::{mmd2, KernelConfig, PldaLearner};
use crate::models::{
    fit_model, make_synthetic, Classifier, Family, FitConfig, GeneratorSpec, LogisticParams,
    TargetModel,
};
use crate::oracle::{
    best_subset_bruteforce, exact_shapley, exhaustive_posterior, exhaustive_probabilities,
    naive_enumerate, naive_mmd2, naive_plda_log_density,
};
use crate::rng::{self, Rng};
use crate::teaching::{
    mh_sample, select_max, teacher_posterior, Explanation, ExplanationKey, ExplanationSpace,
    Learner, Prior, Proposal, SpaceDescriptor, TargetInference,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    All,
    Posterior,
    Selection,
    Mcmc,
    Shap,
    Mmd,
    Plda,
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown oracle suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest disagreement over all cases, in the check's own metric.
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            cases: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
            passed: true,
        }
    }

    fn record(&mut self, error: f64) {
        self.cases += 1;
        if error.is_nan() || error > self.tolerance {
            self.failures += 1;
            self.passed = false;
        }
        if error.is_nan() || error > self.max_error {
            self.max_error = if error.is_nan() { f64::INFINITY } else { error };
        }
    }

    fn fail(&mut self) {
        self.record(f64::INFINITY);
    }
}

/// How many randomized cases each check runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteSize {
    pub posterior_cases: usize,
    pub selection_cases: usize,
    pub mcmc_cases: usize,
    pub mcmc_draws: usize,
    pub shap_max_dim: usize,
    pub mmd_cases: usize,
    pub plda_cases: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self {
            posterior_cases: 500,
            selection_cases: 500,
            mcmc_cases: 6,
            mcmc_draws: 200_000,
            shap_max_dim: 10,
            mmd_cases: 100,
            plda_cases: 100,
        }
    }
}

/// Likelihood lookup by explanation key, for randomized test learners.
struct KeyedLearner {
    values: HashMap<ExplanationKey, f64>,
}

impl Learner for KeyedLearner {
    fn id(&self) -> &str {
        "keyed"
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.likelihood(theta, x)?.ln())
    }
    fn likelihood(&self, _: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(x.key()
            .and_then(|k| self.values.get(&k).copied())
            .unwrap_or(0.0))
    }
}

/// A random enumerable space of at most `max_size` elements with a random
/// prior.
fn random_space(r: &mut Rng, max_size: usize) -> ExplanationSpace {
    match r.random_range(0..3) {
        0 => {
            let n = r.random_range(1..=max_size);
            let items = (0..n).map(|i| Explanation::ExampleSet(vec![i])).collect();
            let weights = (0..n)
                .map(|_| {
                    if r.random_bool(0.1) {
                        0.0
                    } else {
                        r.random::<f64>() * 3.0
                    }
                })
                .collect();
            ExplanationSpace::new(SpaceDescriptor::Listed { items }, Prior::Listed(weights))
        }
        1 => loop {
            let n = r.random_range(1..=14);
            let k = r.random_range(1..=n);
            let space = ExplanationSpace::uniform(SpaceDescriptor::Subsets {
                pool: (0..n).map(|i| i * 2 + 1).collect(),
                size: k,
            });
            if space.size().is_some_and(|s| s as usize <= max_size) {
                return space;
            }
        },
        _ => {
            let dim = r.random_range(1..=12usize.min(max_size.ilog2() as usize).max(1));
            ExplanationSpace::masks(dim, r.random_range(0.1..0.9))
        }
    }
}

/// Random likelihoods over the space's elements, drawn from a coarse grid
/// so ties occur, with some zeros and some very small values.
fn random_learner(r: &mut Rng, space: &ExplanationSpace) -> Result<KeyedLearner> {
    let values = naive_enumerate(space)?
        .into_iter()
        .map(|x| {
            let v = match r.random_range(0..10) {
                0 => 0.0,
                1 => 1e-200 * r.random::<f64>(),
                2..=4 => r.random_range(1..=4) as f64 / 4.0,
                _ => r.random::<f64>(),
            };
            (x.key().expect("discrete space"), v)
        })
        .collect();
    Ok(KeyedLearner { values })
}

fn posterior_check(size: &SuiteSize, seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("posterior-vs-exhaustive", 1e-12);
    let theta = TargetInference::label(0);
    for case in 0..size.posterior_cases {
        let mut r = rng::stream(seed, case as u64);
        let space = random_space(&mut r, 5000);
        let learner = random_learner(&mut r, &space)?;
        match (
            teacher_posterior(&learner, &theta, &space),
            exhaustive_probabilities(&learner, &theta, &space),
        ) {
            (Ok(post), Ok(naive)) => {
                let ours = post.probabilities();
                if ours.len() != naive.len() {
                    res.fail();
                    continue;
                }
                let err = ours
                    .iter()
                    .zip(&naive)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                res.record(err);
            }
            (Err(Error::AllZeroMass), Err(Error::AllZeroMass)) => res.record(0.0),
            _ => res.fail(),
        }
    }
    Ok(res)
}

fn selection_check(size: &SuiteSize, seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("select-max-vs-bruteforce", 0.0);
    let theta = TargetInference::label(0);
    for case in 0..size.selection_cases {
        let mut r = rng::stream(seed, case as u64);
        let space = random_space(&mut r, 5000);
        let learner = random_learner(&mut r, &space)?;
        let ours = teacher_posterior(&learner, &theta, &space).and_then(|p| select_max(&p));
        match (ours, best_subset_bruteforce(&learner, &theta, &space)) {
            (Ok(a), Ok(b)) => res.record(if a == b { 0.0 } else { 1.0 }),
            (Err(Error::AllZeroMass), Err(Error::AllZeroMass)) => res.record(0.0),
            _ => res.fail(),
        }
    }
    Ok(res)
}

/// Total variation between Metropolis draws and the exact posterior.
fn mcmc_check(size: &SuiteSize, seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("mh-total-variation", 0.05);
    let theta = TargetInference::label(0);
    let spaces = |r: &mut Rng, case: usize| match case % 3 {
        0 => {
            let n = r.random_range(5..=50);
            let items = (0..n).map(|i| Explanation::ExampleSet(vec![i])).collect();
            ExplanationSpace::listed(items, None)
        }
        1 => ExplanationSpace::uniform(SpaceDescriptor::Subsets {
            pool: (0..8).collect(),
            size: 2,
        }),
        _ => ExplanationSpace::masks(5, r.random_range(0.2..0.8)),
    };
    for case in 0..size.mcmc_cases {
        let mut r = rng::stream(seed, case as u64);
        let space = spaces(&mut r, case);
        let mut learner = random_learner(&mut r, &space)?;
        // keep the chain irreducible
        learner.values.values_mut().for_each(|v| *v = v.max(0.05));
        let exact = exhaustive_posterior(&learner, &theta, &space)?;
        let proposal = Proposal::default_for(&space)?;
        let run = mh_sample(
            &learner,
            &theta,
            &space,
            proposal,
            rng::derive(seed, case as u64),
            size.mcmc_draws,
            5_000,
            None,
        )?;
        let mut counts: HashMap<ExplanationKey, usize> = HashMap::new();
        for d in &run.draws {
            *counts.entry(d.key().expect("discrete")).or_default() += 1;
        }
        let n = run.draws.len() as f64;
        let probs = exact.probabilities();
        let tv = 0.5
            * exact
                .support
                .iter()
                .zip(&probs)
                .map(|(x, p)| {
                    let c = counts
                        .get(&x.key().expect("discrete"))
                        .copied()
                        .unwrap_or(0);
                    (c as f64 / n - p).abs()
                })
                .sum::<f64>();
        res.record(tv);
    }
    Ok(res)
}

fn normal_vec(r: &mut Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let e: f64 = StandardNormal.sample(r);
            scale * e
        })
        .collect()
}

fn shap_checks(size: &SuiteSize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut agree = CheckResult::new("kernel-shap-exact-vs-shapley", 1e-9);
    let mut efficiency = CheckResult::new("shapley-efficiency", 1e-10);
    let mut linear = CheckResult::new("linear-closed-form", 1e-6);
    for d in 1..=size.shap_max_dim {
        for rep in 0..3u64 {
            let mut r = rng::stream(seed, (d as u64) * 16 + rep);
            let classes = 2 + rep as usize % 2;
            let model = TargetModel::from_logistic(LogisticParams {
                weights: (0..classes).map(|_| normal_vec(&mut r, d, 1.0)).collect(),
                bias: normal_vec(&mut r, classes, 0.5),
            });
            let point = normal_vec(&mut r, d, 1.0);
            let background: Vec<Vec<f64>> = (0..5).map(|_| normal_vec(&mut r, d, 1.0)).collect();
            let class = r.random_range(0..classes);
            let oracle = exact_shapley(&model, &point, &background, class)?;
            let f = model.predict_dist(&point)?[class];
            efficiency.record(
                (oracle.values.iter().sum::<f64>() + oracle.base_value.unwrap_or(0.0) - f).abs(),
            );
            let ours = kernel_shap(
                &model,
                &point,
                &background,
                Some(class),
                Coalitions::Exact,
                0,
            )?;
            agree.record(
                ours.saliency
                    .values
                    .iter()
                    .zip(&oracle.values)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max),
            );

            let w = normal_vec(&mut r, d, 0.02);
            let lin = TargetModel::linear_probability(w.clone(), 0.5);
            let small_point = normal_vec(&mut r, d, 1.0);
            let ours = kernel_shap(
                &lin,
                &small_point,
                &background,
                Some(1),
                Coalitions::Exact,
                0,
            )?;
            let err = (0..d)
                .map(|j| {
                    let mu = background.iter().map(|b| b[j]).sum::<f64>() / background.len() as f64;
                    (ours.saliency.values[j] - w[j] * (small_point[j] - mu)).abs()
                })
                .fold(0.0, f64::max);
            linear.record(err);
        }
    }
    Ok(vec![agree, efficiency, linear])
}

fn mmd_checks(size: &SuiteSize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut agree = CheckResult::new("mmd2-vs-naive", 1e-12);
    let mut self_zero = CheckResult::new("mmd2-self-zero", 1e-12);
    for case in 0..size.mmd_cases {
        let mut r = rng::stream(seed, case as u64);
        let d = r.random_range(1..=4);
        let a: Vec<Vec<f64>> = (0..r.random_range(1..=12))
            .map(|_| normal_vec(&mut r, d, 1.0))
            .collect();
        let b: Vec<Vec<f64>> = (0..r.random_range(1..=12))
            .map(|_| normal_vec(&mut r, d, 1.5))
            .collect();
        let h = r.random_range(0.3..3.0);
        let kernel = KernelConfig::rbf(h)?;
        agree.record((mmd2(&a, &b, &kernel)? - naive_mmd2(&a, &b, h).max(0.0)).abs());
        self_zero.record(mmd2(&a, &a, &kernel)?.abs());
    }
    Ok(vec![agree, self_zero])
}

fn plda_check(size: &SuiteSize, seed: u64) -> Result<CheckResult> {
    let mut res = CheckResult::new("plda-density-vs-naive", 1e-8);
    let ds = make_synthetic(
        &GeneratorSpec::GaussianBlobs {
            classes: 3,
            dim: 3,
            per_class: 10,
            separation: 3.0,
        },
        seed,
    )?
    .dataset;
    let model = fit_model(Family::Plda, &ds, &FitConfig::default(), seed)?;
    let params = model.plda().expect("plda fit").clone();
    let learner = PldaLearner::new(Arc::new(params.clone()), Arc::new(ds.clone()));
    let theta = TargetInference::LatentClassMeans {
        means: params.class_means.clone(),
    };
    for case in 0..size.plda_cases {
        let mut r = rng::stream(seed, case as u64);
        let mut set = Vec::new();
        for c in 0..3 {
            let pool = ds.class_indices(c);
            let k = r.random_range(1..=pool.len());
            let mut pick: Vec<usize> = sample(&mut r, pool.len(), k)
                .into_iter()
                .map(|i| pool[i])
                .collect();
            pick.sort_unstable();
            set.extend(pick);
        }
        let ours = learner.log_likelihood(&theta, &Explanation::ExampleSet(set.clone()))?;
        let members: Vec<(Vec<f64>, usize)> = set
            .iter()
            .map(|&i| (ds.features[i].clone(), ds.labels[i]))
            .collect();
        let naive = naive_plda_log_density(&params, &members, &params.class_means)?;
        res.record((ours - naive).abs() / naive.abs().max(1.0));
    }
    Ok(res)
}

/// Runs the chosen checks. Results are in a fixed order for a given suite.
pub fn run_suite(suite: Suite, size: &SuiteSize, seed: u64) -> Result<Vec<CheckResult>> {
    let want = |s: Suite| suite == Suite::All || suite == s;
    let mut out = Vec::new();
    if want(Suite::Posterior) {
        out.push(posterior_check(size, rng::derive(seed, 0))?);
    }
    if want(Suite::Selection) {
        out.push(selection_check(size, rng::derive(seed, 1))?);
    }
    if want(Suite::Mcmc) {
        out.push(mcmc_check(size, rng::derive(seed, 2))?);
    }
    if want(Suite::Shap) {
        out.extend(shap_checks(size, rng::derive(seed, 3))?);
    }
    if want(Suite::Mmd) {
        out.extend(mmd_checks(size, rng::derive(seed, 4))?);
    }
    if want(Suite::Plda) {
        out.push(plda_check(size, rng::derive(seed, 5))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteSize {
        SuiteSize {
            posterior_cases: 40,
            selection_cases: 40,
            mcmc_cases: 3,
            mcmc_draws: 40_000,
            shap_max_dim: 5,
            mmd_cases: 20,
            plda_cases: 20,
        }
    }

    #[test]
    fn small_suite_passes() {
        let results = run_suite(Suite::All, &small(), 1).unwrap();
        for r in &results {
            assert!(r.passed, "{r:?}");
        }
        assert_eq!(results.len(), 9);
    }

    #[test]
    fn failures_are_counted() {
        let mut c = CheckResult::new("x", 0.1);
        c.record(0.05);
        c.record(0.2);
        c.record(f64::NAN);
        assert_eq!((c.cases, c.failures, c.passed), (3, 2, false));
        assert_eq!(c.max_error, f64::INFINITY);
    }
}
