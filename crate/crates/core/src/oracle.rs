//! Brute-force references for checking the optimized components.
//!
//! Nothing here calls into the numerical code it checks: enumeration,
//! normalization, Shapley values, discrepancies and PLDA densities are all
//! recomputed along separate, deliberately naive paths. Everything is
//! single-threaded.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::explainers::SaliencyVector;
use crate::learners::KernelConfig;
use crate::models::{Classifier, PldaParams};
use crate::teaching::{
    Explanation, ExplanationSpace, Learner, SpaceDescriptor, TargetInference, TeacherPosterior,
};

pub const ORACLE_LIMIT: usize = 1_000_000;

fn subsets_rec(
    pool: &[usize],
    size: usize,
    start: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if cur.len() == size {
        out.push(cur.clone());
        return;
    }
    for i in start..pool.len() {
        if pool.len() - i < size - cur.len() {
            break;
        }
        cur.push(pool[i]);
        subsets_rec(pool, size, i + 1, cur, out);
        cur.pop();
    }
}

fn subsets(pool: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    subsets_rec(pool, size, 0, &mut Vec::new(), &mut out);
    out
}

/// Lists the space in the engine's enumeration order, independently of the
/// engine's own enumerator.
pub fn naive_enumerate(space: &ExplanationSpace) -> Result<Vec<Explanation>> {
    let too_big = |n: usize| {
        if n > ORACLE_LIMIT {
            Err(Error::SpaceTooLarge {
                count: n as u128,
                limit: ORACLE_LIMIT as u128,
            })
        } else {
            Ok(())
        }
    };
    match &space.descriptor {
        SpaceDescriptor::Subsets { pool, size } => Ok(subsets(pool, *size)
            .into_iter()
            .map(Explanation::ExampleSet)
            .collect()),
        SpaceDescriptor::PerClassSubsets { pools, size } => {
            let mut acc: Vec<Vec<usize>> = vec![Vec::new()];
            for pool in pools {
                let choices = subsets(pool, *size);
                too_big(acc.len() * choices.len())?;
                let mut next = Vec::with_capacity(acc.len() * choices.len());
                for prefix in &acc {
                    for c in &choices {
                        let mut v = prefix.clone();
                        v.extend_from_slice(c);
                        next.push(v);
                    }
                }
                acc = next;
            }
            Ok(acc.into_iter().map(Explanation::ExampleSet).collect())
        }
        SpaceDescriptor::Masks { dim, .. } => {
            if *dim >= 21 {
                return Err(Error::SpaceTooLarge {
                    count: 1u128 << dim.min(&127),
                    limit: ORACLE_LIMIT as u128,
                });
            }
            Ok((0..1usize << dim)
                .map(|code| {
                    Explanation::FeatureMask((0..*dim).map(|j| ((code >> j) & 1) as f64).collect())
                })
                .collect())
        }
        SpaceDescriptor::Listed { items } => Ok(items.clone()),
        SpaceDescriptor::SurrogateParameters { .. } => Err(Error::NotEnumerable),
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

fn scored<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<(Vec<Explanation>, Vec<f64>)> {
    let items = naive_enumerate(space)?;
    if items.len() > ORACLE_LIMIT {
        return Err(Error::SpaceTooLarge {
            count: items.len() as u128,
            limit: ORACLE_LIMIT as u128,
        });
    }
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (i, x) in items.into_iter().enumerate() {
        let prior = space.prior.weight(Some(i), &x)?;
        if prior > 0.0 {
            weights.push(learner.likelihood(theta, &x)? * prior);
            support.push(x);
        }
    }
    Ok((support, weights))
}

/// Teacher posterior by direct probability-space normalization.
pub fn exhaustive_posterior<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<TeacherPosterior> {
    let (support, weights) = scored(learner, theta, space)?;
    let total = pairwise_sum(&weights);
    if !(total > 0.0) {
        return Err(Error::AllZeroMass);
    }
    Ok(TeacherPosterior {
        indices: (0..support.len()).collect(),
        support,
        log_weights: weights.iter().map(|w| w.ln()).collect(),
        log_normalizer: total.ln(),
    })
}

/// Normalized probabilities of [`exhaustive_posterior`], computed as
/// `w / sum(w)` rather than through logarithms.
pub fn exhaustive_probabilities<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<Vec<f64>> {
    let (_, weights) = scored(learner, theta, space)?;
    let total = pairwise_sum(&weights);
    if !(total > 0.0) {
        return Err(Error::AllZeroMass);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Full scan for the highest-weight element; the first maximizer wins.
pub fn best_subset_bruteforce<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<Explanation> {
    let (support, weights) = scored(learner, theta, space)?;
    let mut best: Option<usize> = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 && best.is_none_or(|b| w > weights[b]) {
            best = Some(i);
        }
    }
    best.map(|b| support[b].clone()).ok_or(Error::AllZeroMass)
}

/// Full scan in log space, for learners whose likelihoods underflow.
pub fn best_subset_bruteforce_log<L: Learner + ?Sized>(
    learner: &L,
    theta: &TargetInference,
    space: &ExplanationSpace,
) -> Result<Explanation> {
    let items = naive_enumerate(space)?;
    let mut best: Option<(f64, Explanation)> = None;
    for (i, x) in items.into_iter().enumerate() {
        let prior = space.prior.weight(Some(i), &x)?;
        if prior <= 0.0 {
            continue;
        }
        let s = learner.log_likelihood(theta, &x)? + prior.ln();
        if s > f64::NEG_INFINITY && best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, x));
        }
    }
    best.map(|(_, x)| x).ok_or(Error::AllZeroMass)
}

/// Exact Shapley values of `f(z)[class]` with the interventional value
/// function `v(S) = mean_b f(point on S, b elsewhere)[class]`.
pub fn exact_shapley<C: Classifier + ?Sized>(
    model: &C,
    point: &[f64],
    background: &[Vec<f64>],
    class: usize,
) -> Result<SaliencyVector> {
    let d = point.len();
    if d > 15 {
        return Err(Error::InvalidArgument(format!(
            "exact Shapley supports d <= 15, got {d}"
        )));
    }
    if background.is_empty() {
        return Err(Error::InvalidArgument("background set is empty".into()));
    }
    let mut value = vec![0.0; 1 << d];
    for (s, v) in value.iter_mut().enumerate() {
        let mut acc = Vec::with_capacity(background.len());
        for b in background {
            let z: Vec<f64> = (0..d)
                .map(|j| if s >> j & 1 == 1 { point[j] } else { b[j] })
                .collect();
            acc.push(model.predict_dist(&z)?[class]);
        }
        *v = pairwise_sum(&acc) / background.len() as f64;
    }
    let fact: Vec<f64> = (0..=d)
        .scan(1.0, |f, i| {
            if i > 0 {
                *f *= i as f64;
            }
            Some(*f)
        })
        .collect();
    let mut phi = vec![0.0; d];
    for (j, p) in phi.iter_mut().enumerate() {
        let mut terms = Vec::with_capacity(1 << (d - 1));
        for s in 0..(1usize << d) {
            if s >> j & 1 == 1 {
                continue;
            }
            let k = s.count_ones() as usize;
            let w = fact[k] * fact[d - k - 1] / fact[d];
            terms.push(w * (value[s | 1 << j] - value[s]));
        }
        *p = pairwise_sum(&terms);
    }
    Ok(SaliencyVector {
        values: phi,
        normalization: Default::default(),
        std_error: None,
        base_value: Some(value[0]),
    })
}

/// Squared MMD by explicit double loops.
pub fn naive_mmd2(a: &[Vec<f64>], b: &[Vec<f64>], bandwidth: f64) -> f64 {
    let k = |x: &Vec<f64>, y: &Vec<f64>| {
        let mut s = 0.0;
        for i in 0..x.len() {
            s += (x[i] - y[i]) * (x[i] - y[i]);
        }
        (-s / (2.0 * bandwidth * bandwidth)).exp()
    };
    let mut aa = 0.0;
    for x in a {
        for y in a {
            aa += k(x, y);
        }
    }
    let mut bb = 0.0;
    for x in b {
        for y in b {
            bb += k(x, y);
        }
    }
    let mut ab = 0.0;
    for x in a {
        for y in b {
            ab += k(x, y);
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    aa / (na * na) + bb / (nb * nb) - 2.0 * ab / (na * nb)
}

/// Exhaustive minimum-discrepancy prototype set of size `m`, first minimizer
/// in lexicographic order.
pub fn best_prototypes_bruteforce(
    points: &[Vec<f64>],
    m: usize,
    kernel: &KernelConfig,
) -> (Vec<usize>, f64) {
    let all: Vec<usize> = (0..points.len()).collect();
    let mut best = (Vec::new(), f64::INFINITY);
    for s in subsets(&all, m) {
        let protos: Vec<Vec<f64>> = s.iter().map(|&i| points[i].clone()).collect();
        let v = naive_mmd2(&protos, points, kernel.bandwidth);
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

/// Every size-`m` subset with its discrepancy to the full set.
pub fn all_prototype_values(points: &[Vec<f64>], m: usize, kernel: &KernelConfig) -> Vec<f64> {
    let all: Vec<usize> = (0..points.len()).collect();
    subsets(&all, m)
        .into_iter()
        .map(|s| {
            let protos: Vec<Vec<f64>> = s.iter().map(|&i| points[i].clone()).collect();
            naive_mmd2(&protos, points, kernel.bandwidth)
        })
        .collect()
}

/// PLDA mean-posterior log density, written as a full multivariate Gaussian:
/// prior `u ~ N(0, Psi)`, members `z ~ N(u, I)`, posterior precision
/// `Psi^-1 + n I`.
pub fn naive_plda_log_density(
    params: &PldaParams,
    members: &[(Vec<f64>, usize)],
    means: &[Vec<f64>],
) -> Result<f64> {
    let k = params.latent_dim();
    let a = DMatrix::from_fn(k, params.global_mean.len(), |i, j| params.projection[i][j]);
    let mu = DVector::from_column_slice(&params.global_mean);
    let psi_inv = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0 / params.between_variances[i]
        } else {
            0.0
        }
    });
    let mut total = 0.0;
    for (c, mean) in means.iter().enumerate() {
        let mut n = 0.0;
        let mut sum = DVector::zeros(k);
        for (x, label) in members {
            if *label == c {
                sum += &a * (DVector::from_column_slice(x) - &mu);
                n += 1.0;
            }
        }
        if n == 0.0 {
            return Err(Error::MissingClass(c));
        }
        let precision = &psi_inv + DMatrix::identity(k, k) * n;
        let cov = precision
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularSystem("posterior precision".into()))?;
        let post_mean = &cov * sum;
        let r = DVector::from_column_slice(mean) - post_mean;
        let quad = (r.transpose() * &precision * &r)[(0, 0)];
        let log_det_cov = cov.determinant().ln();
        total += -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + log_det_cov + quad);
    }
    Ok(total)
}
