use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{median, sq_dist};
use crate::teaching::{Explanation, Learner, TargetInference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    Rbf,
}

/// `k(a, b) = exp(-|a - b|^2 / (2 h^2))` with bandwidth `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub bandwidth: f64,
}

impl KernelConfig {
    pub fn rbf(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Self {
            kind: KernelKind::Rbf,
            bandwidth,
        })
    }

    /// Bandwidth set to the median pairwise distance of `points`.
    pub fn median_heuristic(points: &[Vec<f64>]) -> Result<Self> {
        let mut d: Vec<f64> = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                d.push(sq_dist(&points[i], &points[j]).sqrt());
            }
        }
        if d.is_empty() {
            return Err(Error::InvalidArgument(
                "median heuristic needs at least two points".into(),
            ));
        }
        let mut h = median(&mut d);
        if h <= 0.0 {
            // mostly duplicates: fall back to the mean nonzero distance
            let nz: Vec<f64> = d.into_iter().filter(|&v| v > 0.0).collect();
            h = nz.iter().sum::<f64>() / nz.len().max(1) as f64;
        }
        Self::rbf(h)
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => (-sq_dist(a, b) / (2.0 * self.bandwidth * self.bandwidth)).exp(),
        }
    }

    /// Sum of `k(a_i, b_j)` over all pairs.
    fn block_sum(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        a.iter()
            .map(|x| b.iter().map(|y| self.eval(x, y)).sum::<f64>())
            .sum()
    }
}

fn cmp_sets(a: &[Vec<f64>], b: &[Vec<f64>]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Squared maximum mean discrepancy, biased (V-statistic) estimate.
pub fn mmd2(set_a: &[Vec<f64>], set_b: &[Vec<f64>], kernel: &KernelConfig) -> Result<f64> {
    if set_a.is_empty() || set_b.is_empty() {
        return Err(Error::InvalidArgument(
            "mmd needs non-empty point sets".into(),
        ));
    }
    // a fixed argument order makes the result exactly symmetric
    let (a, b) = if cmp_sets(set_a, set_b) == Ordering::Greater {
        (set_b, set_a)
    } else {
        (set_a, set_b)
    };
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let v = kernel.block_sum(a, a) / (na * na) + kernel.block_sum(b, b) / (nb * nb)
        - 2.0 * kernel.block_sum(a, b) / (na * nb);
    Ok(v.max(0.0))
}

/// Mean kernel similarity to `data` minus mean similarity to `prototypes`.
pub fn witness(
    point: &[f64],
    data: &[Vec<f64>],
    prototypes: &[Vec<f64>],
    kernel: &KernelConfig,
) -> f64 {
    let mean = |set: &[Vec<f64>]| {
        set.iter().map(|y| kernel.eval(point, y)).sum::<f64>() / set.len() as f64
    };
    mean(data) - mean(prototypes)
}

/// Scores a prototype set by how well its induced distribution matches a
/// class's reference sample: `exp(-mmd2 / temperature)`.
#[derive(Debug, Clone)]
pub struct MmdLearner {
    pub points: Arc<Vec<Vec<f64>>>,
    pub kernel: KernelConfig,
    pub temperature: f64,
}

impl Learner for MmdLearner {
    fn id(&self) -> &str {
        "mmd"
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let TargetInference::ClassDataDistribution { reference, .. } = theta else {
            return Err(Error::InvalidArgument(format!(
                "mmd learner scores class data distributions, not {:?}",
                theta.kind()
            )));
        };
        let protos: Vec<Vec<f64>> = x
            .as_example_set()?
            .iter()
            .map(|&i| {
                self.points.get(i).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("example index {i} out of bounds"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(-mmd2(&protos, reference, &self.kernel)? / self.temperature)
    }
}

#[cfg(test)]
mod tests {
    use rand_distr::{Distribution, StandardNormal};

    use super::*;
    use crate::rng;

    fn cloud(center: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                (0..2)
                    .map(|_| {
                        let v: f64 = StandardNormal.sample(&mut r);
                        center + v
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn identical_sets_have_zero_discrepancy() {
        let x = cloud(0.0, 40, 1);
        let k = KernelConfig::median_heuristic(&x).unwrap();
        assert!(mmd2(&x, &x, &k).unwrap().abs() < 1e-12);
    }

    #[test]
    fn discrepancy_is_exactly_symmetric() {
        let a = cloud(0.0, 30, 2);
        let b = cloud(1.0, 17, 3);
        let k = KernelConfig::rbf(0.7).unwrap();
        assert_eq!(mmd2(&a, &b, &k).unwrap(), mmd2(&b, &a, &k).unwrap());
    }

    #[test]
    fn witness_vanishes_when_prototypes_equal_data() {
        let x = cloud(0.0, 25, 4);
        let k = KernelConfig::rbf(1.0).unwrap();
        for p in &x {
            assert!(witness(p, &x, &x, &k).abs() < 1e-12);
        }
        assert!(witness(&[1e3, 1e3], &x, &x[..3], &k).abs() < 1e-12);
    }

    #[test]
    fn median_heuristic_rejects_single_point() {
        assert!(KernelConfig::median_heuristic(&[vec![0.0]]).is_err());
        assert!(KernelConfig::rbf(0.0).is_err());
    }
}
