//! Probabilistic LDA under the two-covariance model.
//!
//! Fitting whitens the within-class scatter and diagonalizes the whitened
//! between-class scatter, giving a latent space where the within-class
//! covariance is the identity and class means are drawn from
//! `N(0, diag(psi))`. Conditioning on a set of class members yields a
//! closed-form Gaussian posterior over each latent class mean, which is
//! what the example-selection learner scores.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::families::{add_ridge, check_class_support, class_means, scatter};
use super::FitConfig;
use crate::error::{Error, Result};
use crate::math::{dot, softmax_in_place, sq_dist};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
/// Floor on latent between-class variances.
const PSI_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PldaParams {
    pub global_mean: Vec<f64>,
    /// `k x d` map into the latent space.
    pub projection: Vec<Vec<f64>>,
    /// Latent class means fitted on the full data (`C x k`).
    pub class_means: Vec<Vec<f64>>,
    /// Diagonal latent between-class covariance.
    pub between_variances: Vec<f64>,
    pub within_class_covariance: Vec<Vec<f64>>,
    pub between_class_covariance: Vec<Vec<f64>>,
    pub class_priors: Vec<f64>,
}

impl PldaParams {
    pub fn latent_dim(&self) -> usize {
        self.projection.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let centered: Vec<f64> = x
            .iter()
            .zip(&self.global_mean)
            .map(|(a, b)| a - b)
            .collect();
        self.projection
            .iter()
            .map(|row| dot(row, &centered))
            .collect()
    }

    pub fn fit(ds: &Dataset, config: &FitConfig) -> Result<Self> {
        check_class_support(ds, config)?;
        let d = ds.dim();
        let n = ds.len() as f64;
        let means = class_means(ds);
        let counts = ds.class_counts();
        let global_mean = ds.feature_mean();

        let mut within = scatter(ds, &means, None, n);
        add_ridge(&mut within, config.ridge);
        let mut between = vec![vec![0.0; d]; d];
        for (m, &nc) in means.iter().zip(&counts) {
            let diff: Vec<f64> = m.iter().zip(&global_mean).map(|(a, b)| a - b).collect();
            for i in 0..d {
                for j in 0..d {
                    between[i][j] += nc as f64 * diff[i] * diff[j] / n;
                }
            }
        }

        let sw = DMatrix::from_fn(d, d, |i, j| within[i][j]);
        let sb = DMatrix::from_fn(d, d, |i, j| between[i][j]);
        let chol = sw.cholesky().ok_or_else(|| {
            Error::SingularCovariance("within-class covariance is not positive definite".into())
        })?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::SingularCovariance("cannot invert Cholesky factor".into()))?;
        let whitened = &l_inv * sb * l_inv.transpose();
        let sym = (&whitened + whitened.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);

        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let k = config
            .latent_dim
            .unwrap_or_else(|| (ds.class_count.saturating_sub(1)).max(1))
            .clamp(1, d);

        let mut projection = Vec::with_capacity(k);
        let mut between_variances = Vec::with_capacity(k);
        for &col in order.iter().take(k) {
            let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
            // orient so the largest-magnitude component is positive
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            let row: Vec<f64> = (0..d)
                .map(|j| (0..d).map(|i| v[i] * l_inv[(i, j)]).sum())
                .collect();
            projection.push(row);
            between_variances.push(eig.eigenvalues[col].max(PSI_FLOOR));
        }

        let mut params = PldaParams {
            global_mean,
            projection,
            class_means: Vec::new(),
            between_variances,
            within_class_covariance: within,
            between_class_covariance: between,
            class_priors: counts.iter().map(|&c| c as f64 / n).collect(),
        };
        params.class_means = means.iter().map(|m| params.project(m)).collect();
        Ok(params)
    }

    /// Class posterior: equal-covariance Gaussian classification in the
    /// whitened latent space.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let z = self.project(x);
        let mut logits: Vec<f64> = self
            .class_means
            .iter()
            .zip(&self.class_priors)
            .map(|(u, p)| p.ln() - 0.5 * sq_dist(&z, u))
            .collect();
        softmax_in_place(&mut logits);
        logits
    }

    /// Log density that the PLDA mean posterior, conditioned on `members`
    /// (point, class) pairs, assigns to `means` (one latent mean per class).
    pub fn log_mean_density<'a>(
        &self,
        members: impl IntoIterator<Item = (&'a [f64], usize)>,
        means: &[Vec<f64>],
    ) -> Result<f64> {
        let k = self.latent_dim();
        let c_count = means.len();
        let mut sums = vec![vec![0.0; k]; c_count];
        let mut counts = vec![0usize; c_count];
        for (x, c) in members {
            if c >= c_count {
                continue;
            }
            let z = self.project(x);
            for (s, v) in sums[c].iter_mut().zip(&z) {
                *s += v;
            }
            counts[c] += 1;
        }
        let mut total = 0.0;
        for c in 0..c_count {
            if counts[c] == 0 {
                return Err(Error::MissingClass(c));
            }
            if means[c].len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: means[c].len(),
                });
            }
            let n = counts[c] as f64;
            for j in 0..k {
                let psi = self.between_variances[j];
                let shrink = n * psi / (1.0 + n * psi);
                let post_mean = shrink * sums[c][j] / n;
                let post_var = psi / (1.0 + n * psi);
                let r = means[c][j] - post_mean;
                total += -0.5 * (LN_2PI + post_var.ln() + r * r / post_var);
            }
        }
        Ok(total)
    }
}
