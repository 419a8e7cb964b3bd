use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::FitConfig;
use crate::error::{Error, Result};
use crate::math::{dot, softmax_in_place};
use crate::rng;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Lower Cholesky factor as dense rows, plus log-determinant.
#[derive(Debug, Clone)]
pub(crate) struct CholeskyFactor {
    lower: Vec<Vec<f64>>,
    log_det: f64,
}

impl CholeskyFactor {
    pub(crate) fn new(cov: &[Vec<f64>]) -> Result<Self> {
        let d = cov.len();
        let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
        let chol = m.cholesky().ok_or_else(|| {
            Error::SingularCovariance("covariance is not positive definite".into())
        })?;
        let l = chol.l();
        let lower: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..=i).map(|j| l[(i, j)]).collect())
            .collect();
        let log_det = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(Self { lower, log_det })
    }

    /// `log N(x; mean, L L^T)`.
    pub(crate) fn log_density(&self, x: &[f64], mean: &[f64]) -> f64 {
        let d = x.len();
        let mut z = vec![0.0; d];
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.lower[i];
            let mut s = x[i] - mean[i];
            for j in 0..i {
                s -= row[j] * z[j];
            }
            z[i] = s / row[i];
            quad += z[i] * z[i];
        }
        -0.5 * (quad + self.log_det + d as f64 * LN_2PI)
    }
}

pub(crate) fn class_means(ds: &Dataset) -> Vec<Vec<f64>> {
    let d = ds.dim();
    let counts = ds.class_counts();
    let mut means = vec![vec![0.0; d]; ds.class_count];
    for (row, &l) in ds.features.iter().zip(&ds.labels) {
        for (m, v) in means[l].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        if n > 0 {
            m.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    means
}

/// Scatter of rows of `class` (or all rows) around `means[label]`, divided
/// by `divisor`.
pub(crate) fn scatter(
    ds: &Dataset,
    means: &[Vec<f64>],
    class: Option<usize>,
    divisor: f64,
) -> Vec<Vec<f64>> {
    let d = ds.dim();
    let mut s = vec![vec![0.0; d]; d];
    for (row, &l) in ds.features.iter().zip(&ds.labels) {
        if class.is_some_and(|c| c != l) {
            continue;
        }
        let diff: Vec<f64> = row.iter().zip(&means[l]).map(|(a, b)| a - b).collect();
        for i in 0..d {
            for j in 0..d {
                s[i][j] += diff[i] * diff[j];
            }
        }
    }
    for r in s.iter_mut() {
        r.iter_mut().for_each(|v| *v /= divisor);
    }
    s
}

pub(crate) fn add_ridge(m: &mut [Vec<f64>], ridge: f64) {
    for (i, row) in m.iter_mut().enumerate() {
        row[i] += ridge;
    }
}

pub(crate) fn check_class_support(ds: &Dataset, config: &FitConfig) -> Result<()> {
    let counts = ds.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::MissingClass(c));
    }
    if config.ridge == 0.0 {
        if let Some(c) = counts.iter().position(|&n| n < ds.dim() + 1) {
            return Err(Error::SingularCovariance(format!(
                "class {c} has {} points, fewer than dim + 1 = {}, and no ridge is configured",
                counts[c],
                ds.dim() + 1
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub priors: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    /// One matrix when shared, otherwise one per class.
    pub covariances: Vec<Vec<Vec<f64>>>,
}

/// Class-conditional Gaussians with Bayes-rule posteriors.
#[derive(Debug, Clone)]
pub struct GaussianGenerative {
    pub params: GaussianParams,
    factors: Vec<CholeskyFactor>,
}

impl GaussianGenerative {
    pub fn from_params(params: GaussianParams) -> Result<Self> {
        let factors = params
            .covariances
            .iter()
            .map(|c| CholeskyFactor::new(c))
            .collect::<Result<_>>()?;
        Ok(Self { params, factors })
    }

    pub fn fit(ds: &Dataset, config: &FitConfig) -> Result<Self> {
        check_class_support(ds, config)?;
        let means = class_means(ds);
        let counts = ds.class_counts();
        let n = ds.len() as f64;
        let priors = counts.iter().map(|&c| c as f64 / n).collect();
        let covariances = if config.shared_covariance {
            let mut s = scatter(ds, &means, None, n);
            add_ridge(&mut s, config.ridge);
            vec![s]
        } else {
            (0..ds.class_count)
                .map(|c| {
                    let mut s = scatter(ds, &means, Some(c), counts[c] as f64);
                    add_ridge(&mut s, config.ridge);
                    s
                })
                .collect()
        };
        Self::from_params(GaussianParams {
            priors,
            means,
            covariances,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut logits: Vec<f64> = self
            .params
            .means
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let f = &self.factors[c.min(self.factors.len() - 1)];
                self.params.priors[c].ln() + f.log_density(x, m)
            })
            .collect();
        softmax_in_place(&mut logits);
        logits
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// One row per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LogisticParams {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut logits: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| dot(w, x) + b)
            .collect();
        softmax_in_place(&mut logits);
        logits
    }

    /// Multinomial logistic regression by full-batch gradient descent on
    /// mean cross-entropy plus `l2/2 * |W|^2`. Starts from zero, so the fit
    /// is seed-independent.
    pub fn fit(ds: &Dataset, config: &FitConfig) -> (Self, Vec<f64>) {
        let (c, d, n) = (ds.class_count, ds.dim(), ds.len() as f64);
        let mut p = LogisticParams {
            weights: vec![vec![0.0; d]; c],
            bias: vec![0.0; c],
        };
        let mut trace = Vec::with_capacity(config.epochs + 1);
        for _ in 0..config.epochs {
            let mut gw = vec![vec![0.0; d]; c];
            let mut gb = vec![0.0; c];
            let mut loss = 0.0;
            for (x, &y) in ds.features.iter().zip(&ds.labels) {
                let probs = p.predict(x);
                loss -= probs[y].max(1e-300).ln();
                for k in 0..c {
                    let g = probs[k] - if k == y { 1.0 } else { 0.0 };
                    gb[k] += g;
                    for (gwj, xj) in gw[k].iter_mut().zip(x) {
                        *gwj += g * xj;
                    }
                }
            }
            let reg: f64 = p.weights.iter().flatten().map(|w| w * w).sum();
            trace.push(loss / n + 0.5 * config.l2 * reg);
            for k in 0..c {
                for j in 0..d {
                    let g = gw[k][j] / n + config.l2 * p.weights[k][j];
                    p.weights[k][j] -= config.learning_rate * g;
                }
                p.bias[k] -= config.learning_rate * gb[k] / n;
            }
        }
        (p, trace)
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out x in`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// Fully connected network with tanh hidden layers and softmax output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<DenseLayer>,
}

impl MlpParams {
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (li, layer) in self.layers.iter().enumerate() {
            let input = acts.last().unwrap();
            let mut out: Vec<f64> = layer
                .weights
                .iter()
                .zip(&layer.bias)
                .map(|(w, b)| dot(w, input) + b)
                .collect();
            if li + 1 < self.layers.len() {
                out.iter_mut().for_each(|v| *v = v.tanh());
            } else {
                softmax_in_place(&mut out);
            }
            acts.push(out);
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).pop().unwrap()
    }

    pub fn fit(ds: &Dataset, config: &FitConfig, seed: u64) -> (Self, Vec<f64>) {
        let mut sizes = vec![ds.dim()];
        sizes.extend(config.hidden.iter().copied());
        sizes.push(ds.class_count);
        let mut rng = rng::seeded(seed);
        let mut p = MlpParams {
            layers: sizes
                .windows(2)
                .map(|w| {
                    let bound = 1.0 / (w[0] as f64).sqrt();
                    DenseLayer {
                        weights: (0..w[1])
                            .map(|_| (0..w[0]).map(|_| rng.random_range(-bound..bound)).collect())
                            .collect(),
                        bias: vec![0.0; w[1]],
                    }
                })
                .collect(),
        };
        let n = ds.len() as f64;
        let mut trace = Vec::with_capacity(config.epochs);
        for _ in 0..config.epochs {
            let mut grads: Vec<DenseLayer> = p
                .layers
                .iter()
                .map(|l| DenseLayer {
                    weights: vec![vec![0.0; l.weights[0].len()]; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect();
            let mut loss = 0.0;
            for (x, &y) in ds.features.iter().zip(&ds.labels) {
                let acts = p.forward(x);
                let out = acts.last().unwrap();
                loss -= out[y].max(1e-300).ln();
                let mut delta: Vec<f64> = out
                    .iter()
                    .enumerate()
                    .map(|(k, &o)| o - if k == y { 1.0 } else { 0.0 })
                    .collect();
                for li in (0..p.layers.len()).rev() {
                    let input = &acts[li];
                    for (k, &dk) in delta.iter().enumerate() {
                        grads[li].bias[k] += dk;
                        for (g, xi) in grads[li].weights[k].iter_mut().zip(input) {
                            *g += dk * xi;
                        }
                    }
                    if li > 0 {
                        let layer = &p.layers[li];
                        delta = (0..input.len())
                            .map(|i| {
                                let back: f64 = delta
                                    .iter()
                                    .enumerate()
                                    .map(|(k, dk)| dk * layer.weights[k][i])
                                    .sum();
                                back * (1.0 - input[i] * input[i])
                            })
                            .collect();
                    }
                }
            }
            let reg: f64 = p
                .layers
                .iter()
                .flat_map(|l| l.weights.iter().flatten())
                .map(|w| w * w)
                .sum();
            trace.push(loss / n + 0.5 * config.l2 * reg);
            for (layer, g) in p.layers.iter_mut().zip(&grads) {
                for (wrow, grow) in layer.weights.iter_mut().zip(&g.weights) {
                    for (w, gw) in wrow.iter_mut().zip(grow) {
                        *w -= config.learning_rate * (gw / n + config.l2 * *w);
                    }
                }
                for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                    *b -= config.learning_rate * gb / n;
                }
            }
        }
        (p, trace)
    }
}

// ---------------------------------------------------------------------------

/// Two-class model whose class-1 probability is `clamp(w . x + b, 0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbabilityParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearProbabilityParams {
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let p1 = (dot(&self.weights, x) + self.intercept).clamp(0.0, 1.0);
        vec![1.0 - p1, p1]
    }

    /// Ridge regression of the class-1 indicator on the features.
    pub fn fit(ds: &Dataset, config: &FitConfig) -> Result<Self> {
        if ds.class_count != 2 {
            return Err(Error::BadSpec(
                "linear-probability models need exactly two classes".into(),
            ));
        }
        let d = ds.dim();
        let n = ds.len() as f64;
        let mean = ds.feature_mean();
        let ybar = ds.labels.iter().filter(|&&l| l == 1).count() as f64 / n;
        let mut xtx = DMatrix::<f64>::zeros(d, d);
        let mut xty = nalgebra::DVector::<f64>::zeros(d);
        for (row, &l) in ds.features.iter().zip(&ds.labels) {
            let y = if l == 1 { 1.0 } else { 0.0 } - ybar;
            for i in 0..d {
                let xi = row[i] - mean[i];
                xty[i] += xi * y;
                for j in 0..d {
                    xtx[(i, j)] += xi * (row[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            xtx[(i, i)] += config.l2.max(1e-12) * n;
        }
        let w = xtx
            .cholesky()
            .ok_or_else(|| Error::SingularSystem("linear-probability normal equations".into()))?
            .solve(&xty);
        let weights: Vec<f64> = w.iter().copied().collect();
        let intercept = ybar - dot(&weights, &mean);
        Ok(Self { weights, intercept })
    }
}
