//! Local linear surrogates: a kernel-weighted ridge fit of the target's
//! class probability on Gaussian probes around the explained point.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::learners::Probes;
use crate::math::sq_dist;
use crate::models::Classifier;
use crate::rng;
use crate::teaching::{LinearWeights, TargetInference};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LimeConfig {
    pub probes: usize,
    pub ridge: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        Self {
            probes: 2000,
            ridge: 1e-3,
        }
    }
}

/// `count` Gaussian probes of scale `width` around `center`, weighted by an
/// RBF kernel of the same width and normalized to unit total.
pub fn local_probes(center: &[f64], width: f64, count: usize, seed: u64) -> Result<Probes> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {width}"
        )));
    }
    let points: Vec<Vec<f64>> = (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            center
                .iter()
                .map(|c| {
                    let e: f64 = StandardNormal.sample(&mut r);
                    c + width * e
                })
                .collect()
        })
        .collect();
    let mut weights: Vec<f64> = points
        .iter()
        .map(|p| (-sq_dist(p, center) / (2.0 * width * width)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroTotalWeight);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(Probes { points, weights })
}

/// Weighted ridge regression of `targets` on the probe points with an
/// unpenalized intercept.
pub fn weighted_ridge(probes: &Probes, targets: &[f64], ridge: f64) -> Result<LinearWeights> {
    let total = probes.validate()?;
    check_dim(probes.points.len(), targets.len())?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge strength must be nonnegative, got {ridge}"
        )));
    }
    let d = probes.points[0].len();
    let w: Vec<f64> = probes.weights.iter().map(|v| v / total).collect();
    let mut mean_x = vec![0.0; d];
    let mut mean_y = 0.0;
    for ((p, &wi), &y) in probes.points.iter().zip(&w).zip(targets) {
        check_dim(d, p.len())?;
        for (m, v) in mean_x.iter_mut().zip(p) {
            *m += wi * v;
        }
        mean_y += wi * y;
    }
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut centered = vec![0.0; d];
    for ((p, &wi), &y) in probes.points.iter().zip(&w).zip(targets) {
        for j in 0..d {
            centered[j] = p[j] - mean_x[j];
        }
        for i in 0..d {
            rhs[i] += wi * centered[i] * (y - mean_y);
            for j in 0..d {
                gram[(i, j)] += wi * centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let beta = gram
        .cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::SingularSystem("probe covariance is singular; add ridge".into()))?;
    let weights: Vec<f64> = beta.iter().copied().collect();
    let intercept = mean_y - crate::math::dot(&weights, &mean_x);
    let fitted = LinearWeights {
        weights,
        intercept,
        weighted_r2: 0.0,
    };
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for ((p, &wi), &y) in probes.points.iter().zip(&w).zip(targets) {
        ss_res += wi * (y - fitted.evaluate(p)).powi(2);
        ss_tot += wi * (y - mean_y).powi(2);
    }
    let weighted_r2 = if ss_tot > 1e-20 {
        1.0 - ss_res / ss_tot
    } else if ss_res < 1e-20 {
        1.0
    } else {
        0.0
    };
    Ok(LinearWeights {
        weighted_r2,
        ..fitted
    })
}

/// Local linear approximation of the target's probability for the class
/// named in a `LocalDecisionBoundary` target.
pub fn lime_local<C: Classifier + ?Sized>(
    model: &C,
    theta: &TargetInference,
    config: &LimeConfig,
    seed: u64,
) -> Result<LinearWeights> {
    let TargetInference::LocalDecisionBoundary {
        class,
        center,
        width,
    } = theta
    else {
        return Err(Error::InvalidArgument(
            "lime needs a local decision boundary target".into(),
        ));
    };
    check_dim(model.dim(), center.len())?;
    if *class >= model.class_count() {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range"
        )));
    }
    if config.probes < center.len() + 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} probes for {} features",
            center.len() + 2,
            center.len()
        )));
    }
    let probes = local_probes(center, *width, config.probes, seed)?;
    let targets = probes
        .points
        .par_iter()
        .map(|p| Ok(model.predict_dist(p)?[*class]))
        .collect::<Result<Vec<f64>>>()?;
    weighted_ridge(&probes, &targets, config.ridge)
}
