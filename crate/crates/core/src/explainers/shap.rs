//! Kernel SHAP: additive attributions as the weighted least-squares fit of
//! a linear model over feature coalitions, with the Shapley kernel as the
//! weighting and local accuracy imposed exactly.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::saliency::SaliencyVector;
use crate::error::{check_dim, Error, Result};
use crate::math::{argmax, binomial};
use crate::models::Classifier;
use crate::rng;

pub const EXACT_LIMIT: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coalitions {
    /// Every proper non-empty coalition.
    Exact,
    /// `count` coalitions drawn from the Shapley kernel.
    Sampled { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapResult {
    /// Attributions with `base_value` set to the background mean output.
    pub saliency: SaliencyVector,
    pub class: usize,
    /// Model output at the explained point.
    pub output: f64,
    pub coalitions_used: usize,
}

/// Mean model output for `class` over the background, with coalition
/// features taken from `point`.
fn coalition_value<C: Classifier + ?Sized>(
    model: &C,
    point: &[f64],
    background: &[Vec<f64>],
    members: &[bool],
    class: usize,
) -> Result<f64> {
    let mut total = 0.0;
    let mut z = vec![0.0; point.len()];
    for b in background {
        for j in 0..point.len() {
            z[j] = if members[j] { point[j] } else { b[j] };
        }
        total += model.predict_dist(&z)?[class];
    }
    Ok(total / background.len() as f64)
}

fn shapley_kernel(d: usize, size: usize) -> f64 {
    (d - 1) as f64 / (binomial(d, size) as f64 * size as f64 * (d - size) as f64)
}

fn draw_coalitions(d: usize, count: usize, seed: u64) -> Vec<Vec<bool>> {
    // sizes drawn with probability proportional to the total kernel mass
    // of each size, members uniform within a size
    let mass: Vec<f64> = (1..d)
        .map(|s| (d - 1) as f64 / (s * (d - s)) as f64)
        .collect();
    let total: f64 = mass.iter().sum();
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let mut u = r.random::<f64>() * total;
            let mut size = d - 1;
            for (k, m) in mass.iter().enumerate() {
                if u < *m {
                    size = k + 1;
                    break;
                }
                u -= m;
            }
            let mut members = vec![false; d];
            for j in sample(&mut r, d, size) {
                members[j] = true;
            }
            members
        })
        .collect()
}

/// Attributions for the model's probability of `class` (default: the
/// predicted class) at `point`.
pub fn kernel_shap<C: Classifier + ?Sized>(
    model: &C,
    point: &[f64],
    background: &[Vec<f64>],
    class: Option<usize>,
    coalitions: Coalitions,
    seed: u64,
) -> Result<ShapResult> {
    let d = point.len();
    check_dim(model.dim(), d)?;
    if background.is_empty() {
        return Err(Error::InvalidArgument("background set is empty".into()));
    }
    for b in background {
        check_dim(d, b.len())?;
    }
    let output_dist = model.predict_dist(point)?;
    let class = class.unwrap_or_else(|| argmax(&output_dist));
    if class >= output_dist.len() {
        return Err(Error::InvalidArgument(format!(
            "class {class} out of range"
        )));
    }
    let output = output_dist[class];
    let base = coalition_value(model, point, background, &vec![false; d], class)?;
    let full = coalition_value(model, point, background, &vec![true; d], class)?;
    let delta = full - base;

    let (rows, weights): (Vec<Vec<bool>>, Vec<f64>) = match coalitions {
        Coalitions::Exact => {
            if d > EXACT_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "exact coalitions support at most {EXACT_LIMIT} features, got {d}"
                )));
            }
            (1..(1usize << d) - 1)
                .map(|code| {
                    let m: Vec<bool> = (0..d).map(|j| code >> j & 1 == 1).collect();
                    let size = code.count_ones() as usize;
                    (m, shapley_kernel(d, size))
                })
                .unzip()
        }
        Coalitions::Sampled { count } => {
            if count == 0 {
                return Err(Error::InvalidArgument(
                    "coalition count must be at least 1".into(),
                ));
            }
            let rows = if d < 2 {
                Vec::new()
            } else {
                draw_coalitions(d, count, seed)
            };
            let w = vec![1.0; rows.len()];
            (rows, w)
        }
    };

    let phi = if d == 1 {
        vec![delta]
    } else {
        let values = rows
            .par_iter()
            .map(|m| coalition_value(model, point, background, m, class))
            .collect::<Result<Vec<f64>>>()?;
        // eliminate the last attribution through sum(phi) = delta:
        // v - base - z_last * delta = sum_{j<last} (z_j - z_last) phi_j
        let p = d - 1;
        let mut ata = DMatrix::<f64>::zeros(p, p);
        let mut atb = DVector::<f64>::zeros(p);
        for ((m, &w), &v) in rows.iter().zip(&weights).zip(&values) {
            let zl = if m[p] { 1.0 } else { 0.0 };
            let a: Vec<f64> = (0..p).map(|j| if m[j] { 1.0 } else { 0.0 } - zl).collect();
            let y = v - base - zl * delta;
            for i in 0..p {
                if a[i] == 0.0 {
                    continue;
                }
                atb[i] += w * a[i] * y;
                for j in 0..p {
                    ata[(i, j)] += w * a[i] * a[j];
                }
            }
        }
        let sol = ata
            .clone()
            .cholesky()
            .map(|c| c.solve(&atb))
            .ok_or_else(|| {
                Error::SingularSystem(format!(
                    "coalition system of size {p} is not positive definite ({} coalitions)",
                    rows.len()
                ))
            })?;
        let mut phi: Vec<f64> = sol.iter().copied().collect();
        let last = delta - phi.iter().sum::<f64>();
        phi.push(last);
        phi
    };
    Ok(ShapResult {
        saliency: SaliencyVector {
            values: phi,
            normalization: Default::default(),
            std_error: None,
            base_value: Some(base),
        },
        class,
        output,
        coalitions_used: rows.len().max(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticParams, TargetModel};
    use crate::oracle::exact_shapley;

    fn logistic() -> TargetModel {
        TargetModel::from_logistic(LogisticParams {
            weights: vec![vec![0.0; 4], vec![0.8, 0.8, -0.5, 0.0]],
            bias: vec![0.0, 0.2],
        })
    }

    fn background() -> Vec<Vec<f64>> {
        (0..6)
            .map(|i| (0..4).map(|j| ((i * 4 + j) as f64 * 0.77).sin()).collect())
            .collect()
    }

    #[test]
    fn exact_mode_matches_shapley_enumeration() {
        let m = logistic();
        let point = [0.3, -0.4, 1.2, 0.9];
        let res = kernel_shap(&m, &point, &background(), Some(1), Coalitions::Exact, 0).unwrap();
        let oracle = exact_shapley(&m, &point, &background(), 1).unwrap();
        for (a, b) in res.saliency.values.iter().zip(&oracle.values) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn symmetric_and_dummy_features() {
        let m = logistic();
        let point = [0.5, 0.5, 1.0, 3.0];
        let bg: Vec<Vec<f64>> = background()
            .into_iter()
            .map(|mut b| {
                b[1] = b[0];
                b
            })
            .collect();
        let res = kernel_shap(&m, &point, &bg, Some(1), Coalitions::Exact, 0).unwrap();
        let phi = &res.saliency.values;
        assert!((phi[0] - phi[1]).abs() < 1e-9);
        assert!(phi[3].abs() < 1e-9);
    }

    #[test]
    fn local_accuracy_holds_for_sampled_coalitions() {
        let m = logistic();
        let point = [0.3, -0.4, 1.2, 0.9];
        let res = kernel_shap(
            &m,
            &point,
            &background(),
            None,
            Coalitions::Sampled { count: 200 },
            4,
        )
        .unwrap();
        let total = res.saliency.values.iter().sum::<f64>() + res.saliency.base_value.unwrap();
        assert!((total - res.output).abs() < 1e-6);
    }

    #[test]
    fn too_few_coalitions_are_singular() {
        let m = logistic();
        let err = kernel_shap(
            &m,
            &[0.0; 4],
            &background(),
            Some(1),
            Coalitions::Sampled { count: 1 },
            0,
        );
        assert!(matches!(err, Err(Error::SingularSystem(_))));
    }
}
