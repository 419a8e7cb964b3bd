//! Soft binary decision trees distilled from a target model.
//!
//! Every inner node routes right with probability
//! `sigmoid((w . x + b) / temperature)` on standardized inputs; the tree's
//! prediction is the path-probability mixture of its leaf distributions.
//! Training minimizes the weighted mean `KL(target || tree)` minus
//! `entropy_strength` times the mean binary entropy of each node's
//! path-weighted routing rate, so a positive strength favours trees that
//! spread traffic over both branches of every split.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{binary_entropy, dot, kl_divergence, sigmoid, softmax_in_place};
use crate::models::{Classifier, Dataset};
use crate::rng;

pub const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftNode {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftTree {
    pub depth: usize,
    /// Per-feature centering applied before the gates.
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    /// Heap order: node `i` has children `2i+1` (left) and `2i+2` (right).
    pub inner: Vec<SoftNode>,
    /// Class distribution per leaf, left to right.
    pub leaves: Vec<Vec<f64>>,
    /// Mean binary entropy of the nodes' routing rates on the training data.
    pub path_entropy: f64,
}

impl SoftTree {
    pub fn dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn class_count(&self) -> usize {
        self.leaves[0].len()
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_mean)
            .zip(&self.input_scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Probability of reaching each node (inner nodes then leaves, heap order).
    pub fn path_probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        let n_inner = self.inner.len();
        let mut reach = vec![0.0; 2 * n_inner + 1];
        reach[0] = 1.0;
        for (i, node) in self.inner.iter().enumerate() {
            let right = sigmoid((dot(&node.weights, &z) + node.bias) / node.temperature);
            reach[2 * i + 1] = reach[i] * (1.0 - right);
            reach[2 * i + 2] = reach[i] * right;
        }
        reach
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let reach = self.path_probabilities(x);
        let first_leaf = self.inner.len();
        let mut out = vec![0.0; self.class_count()];
        for (l, leaf) in self.leaves.iter().enumerate() {
            let p = reach[first_leaf + l];
            for (o, q) in out.iter_mut().zip(leaf) {
                *o += p * q;
            }
        }
        out
    }
}

impl Classifier for SoftTree {
    fn class_count(&self) -> usize {
        SoftTree::class_count(self)
    }
    fn dim(&self) -> usize {
        SoftTree::dim(self)
    }
    fn predict_dist(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(SoftTree::dim(self), x.len())?;
        Ok(self.predict(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoftTreeConfig {
    pub depth: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the routing-entropy prior.
    pub entropy_strength: f64,
    pub temperature: f64,
    pub fit: TreeFit,
}

/// What the tree is fitted to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TreeFit {
    /// The whole predictive distribution, by `KL(target || tree)`.
    #[default]
    Distribution,
    /// One class probability, by squared error.
    ClassProbability { class: usize },
}

impl Default for SoftTreeConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            epochs: 400,
            learning_rate: 0.05,
            entropy_strength: 0.0,
            temperature: 1.0,
            fit: TreeFit::Distribution,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillResult {
    pub tree: SoftTree,
    /// Training objective before each update.
    pub loss_trace: Vec<f64>,
    /// Weighted mean fit term of the objective at the end of training.
    pub final_fit_loss: f64,
    pub final_mean_kl: f64,
    pub gate_entropy: f64,
}

/// Trainable parameters in raw form.
#[derive(Debug, Clone)]
pub(crate) struct TreeParams {
    pub gate_w: Vec<Vec<f64>>,
    pub gate_b: Vec<f64>,
    pub leaf_logits: Vec<Vec<f64>>,
    pub temperature: f64,
}

pub(crate) struct Objective {
    pub loss: f64,
    pub fit: f64,
    pub mean_kl: f64,
    pub entropy: f64,
}

/// Standardized training data.
pub(crate) struct TrainingSet<'a> {
    pub inputs: Vec<Vec<f64>>,
    pub targets: &'a [Vec<f64>],
    pub weights: Vec<f64>,
}

impl TreeParams {
    fn n_inner(&self) -> usize {
        self.gate_b.len()
    }

    fn forward(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n_inner = self.n_inner();
        let mut right = vec![0.0; n_inner];
        let mut reach = vec![0.0; 2 * n_inner + 1];
        reach[0] = 1.0;
        for i in 0..n_inner {
            right[i] = sigmoid((dot(&self.gate_w[i], z) + self.gate_b[i]) / self.temperature);
            reach[2 * i + 1] = reach[i] * (1.0 - right[i]);
            reach[2 * i + 2] = reach[i] * right[i];
        }
        (right, reach)
    }

    fn leaf_dists(&self) -> Vec<Vec<f64>> {
        self.leaf_logits
            .iter()
            .map(|l| {
                let mut q = l.clone();
                softmax_in_place(&mut q);
                q
            })
            .collect()
    }

    /// Objective value and, when `grad` is given, its gradient (same shape
    /// as `self`).
    pub(crate) fn evaluate(
        &self,
        data: &TrainingSet,
        fit: TreeFit,
        strength: f64,
        mut grad: Option<&mut TreeParams>,
    ) -> Objective {
        let n_inner = self.n_inner();
        let n_leaves = n_inner + 1;
        let classes = self.leaf_logits[0].len();
        let leaves = self.leaf_dists();
        let total_w: f64 = data.weights.iter().sum();

        let mut kl_sum = 0.0;
        let mut fit_sum = 0.0;
        let mut num = vec![0.0; n_inner];
        let mut den = vec![0.0; n_inner];
        let mut cache = Vec::with_capacity(data.inputs.len());
        for ((z, t), &w) in data.inputs.iter().zip(data.targets).zip(&data.weights) {
            let (right, reach) = self.forward(z);
            let mut q = vec![0.0; classes];
            for l in 0..n_leaves {
                for k in 0..classes {
                    q[k] += reach[n_inner + l] * leaves[l][k];
                }
            }
            let kl = kl_divergence(t, &q);
            kl_sum += w * kl;
            fit_sum += w * match fit {
                TreeFit::Distribution => kl,
                TreeFit::ClassProbability { class } => (q[class] - t[class]).powi(2),
            };
            for i in 0..n_inner {
                num[i] += w * reach[i] * right[i];
                den[i] += w * reach[i];
            }
            cache.push((right, reach, q));
        }
        let alpha: Vec<f64> = num
            .iter()
            .zip(&den)
            .map(|(n, d)| if *d > 0.0 { n / d } else { 0.5 })
            .collect();
        let entropy = alpha.iter().map(|&a| binary_entropy(a)).sum::<f64>() / n_inner as f64;
        let mean_kl = kl_sum / total_w;
        let mean_fit = fit_sum / total_w;
        let loss = mean_fit - strength * entropy;

        if let Some(g) = grad.as_mut() {
            for row in g.gate_w.iter_mut().chain(g.leaf_logits.iter_mut()) {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
            g.gate_b.iter_mut().for_each(|v| *v = 0.0);

            // d(-strength * entropy)/d alpha_i
            let coef: Vec<f64> = alpha
                .iter()
                .zip(&den)
                .map(|(&a, &d)| {
                    if d <= 0.0 {
                        return 0.0;
                    }
                    let a = a.clamp(1e-12, 1.0 - 1e-12);
                    -strength / n_inner as f64 * ((1.0 - a) / a).ln() / d
                })
                .collect();

            let mut s = vec![0.0; 2 * n_inner + 1];
            let mut da = vec![0.0; n_inner];
            for (((z, t), &w), (right, reach, q)) in data
                .inputs
                .iter()
                .zip(data.targets)
                .zip(&data.weights)
                .zip(&cache)
            {
                let scale = w / total_w;
                // fit part; s holds d(fit)/d(reach) per leaf
                for l in 0..n_leaves {
                    let p = reach[n_inner + l];
                    match fit {
                        TreeFit::Distribution => {
                            let r: f64 = (0..classes)
                                .filter(|&k| t[k] > 0.0)
                                .map(|k| t[k] * leaves[l][k] / q[k].max(1e-300))
                                .sum();
                            s[n_inner + l] = -r;
                            for j in 0..classes {
                                let tj_over_q = if t[j] > 0.0 {
                                    t[j] / q[j].max(1e-300)
                                } else {
                                    0.0
                                };
                                g.leaf_logits[l][j] += scale * p * leaves[l][j] * (r - tj_over_q);
                            }
                        }
                        TreeFit::ClassProbability { class } => {
                            let e2 = 2.0 * (q[class] - t[class]);
                            let qc = leaves[l][class];
                            s[n_inner + l] = e2 * qc;
                            for j in 0..classes {
                                let delta = if j == class { 1.0 } else { 0.0 };
                                g.leaf_logits[l][j] += scale * e2 * p * qc * (delta - leaves[l][j]);
                            }
                        }
                    }
                }
                for i in (0..n_inner).rev() {
                    s[i] = (1.0 - right[i]) * s[2 * i + 1] + right[i] * s[2 * i + 2];
                }
                for i in 0..n_inner {
                    let sig = right[i];
                    da[i] = scale * reach[i] * sig * (1.0 - sig) * (s[2 * i + 2] - s[2 * i + 1]);
                }
                // entropy part
                if strength != 0.0 {
                    for i in 0..n_inner {
                        let c = coef[i] * w;
                        if c == 0.0 {
                            continue;
                        }
                        da[i] += c * reach[i] * right[i] * (1.0 - right[i]);
                        let spread = right[i] - alpha[i];
                        let mut child = i;
                        while child > 0 {
                            let parent = (child - 1) / 2;
                            let d_reach = if child == 2 * parent + 2 {
                                reach[i] * (1.0 - right[parent])
                            } else {
                                -reach[i] * right[parent]
                            };
                            da[parent] += c * d_reach * spread;
                            child = parent;
                        }
                    }
                }
                for i in 0..n_inner {
                    let gi = da[i] / self.temperature;
                    g.gate_b[i] += gi;
                    for (gw, zj) in g.gate_w[i].iter_mut().zip(z) {
                        *gw += gi * zj;
                    }
                }
            }
        }
        Objective {
            loss,
            fit: mean_fit,
            mean_kl,
            entropy,
        }
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [&mut f64], grads: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for (i, p) in params.iter_mut().enumerate() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grads[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grads[i] * grads[i];
            **p -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

fn flat_mut(p: &mut TreeParams) -> Vec<&mut f64> {
    let mut out: Vec<&mut f64> = Vec::new();
    for row in p.gate_w.iter_mut() {
        out.extend(row.iter_mut());
    }
    out.extend(p.gate_b.iter_mut());
    for row in p.leaf_logits.iter_mut() {
        out.extend(row.iter_mut());
    }
    out
}

fn flat(p: &TreeParams) -> Vec<f64> {
    p.gate_w
        .iter()
        .flatten()
        .chain(&p.gate_b)
        .chain(p.leaf_logits.iter().flatten())
        .copied()
        .collect()
}

pub(crate) fn standardizer(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = points[0].len();
    let n = points.len() as f64;
    let mut mean = vec![0.0; d];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / n;
        }
    }
    let mut scale = vec![0.0; d];
    for p in points {
        for ((s, v), m) in scale.iter_mut().zip(p).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    (mean, scale)
}

pub(crate) fn init_params(
    dim: usize,
    classes: usize,
    config: &SoftTreeConfig,
    seed: u64,
) -> TreeParams {
    let n_inner = (1usize << config.depth) - 1;
    let mut rng = rng::seeded(seed);
    let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("valid normal");
    let leaf_normal = Normal::new(0.0, 0.01).expect("valid normal");
    TreeParams {
        gate_w: (0..n_inner)
            .map(|_| (0..dim).map(|_| normal.sample(&mut rng)).collect())
            .collect(),
        gate_b: vec![0.0; n_inner],
        leaf_logits: (0..n_inner + 1)
            .map(|_| (0..classes).map(|_| leaf_normal.sample(&mut rng)).collect())
            .collect(),
        temperature: config.temperature,
    }
}

/// Fits a soft tree to `targets` at `points` (optionally weighted) by
/// full-batch Adam.
pub fn train_soft_tree(
    points: &[Vec<f64>],
    targets: &[Vec<f64>],
    weights: Option<&[f64]>,
    config: &SoftTreeConfig,
    seed: u64,
) -> Result<DistillResult> {
    if !(1..=MAX_DEPTH).contains(&config.depth) {
        return Err(Error::InvalidArgument(format!(
            "tree depth must be in 1..={MAX_DEPTH}, got {}",
            config.depth
        )));
    }
    if points.is_empty() || points.len() != targets.len() {
        return Err(Error::InvalidArgument(
            "need one target per training point".into(),
        ));
    }
    if let TreeFit::ClassProbability { class } = config.fit {
        if targets.iter().any(|t| class >= t.len()) {
            return Err(Error::InvalidArgument(format!(
                "class {class} out of range"
            )));
        }
    }
    if !(config.temperature > 0.0) || !(config.entropy_strength >= 0.0) {
        return Err(Error::InvalidArgument(
            "temperature must be positive and entropy strength nonnegative".into(),
        ));
    }
    let weights: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; points.len()],
    };
    if weights.len() != points.len()
        || weights.iter().any(|w| !(*w >= 0.0))
        || weights.iter().sum::<f64>() <= 0.0
    {
        return Err(Error::InvalidArgument(
            "weights must be nonnegative and not all zero".into(),
        ));
    }
    let dim = points[0].len();
    let classes = targets[0].len();
    let (input_mean, input_scale) = standardizer(points);
    let data = TrainingSet {
        inputs: points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&input_mean)
                    .zip(&input_scale)
                    .map(|((v, m), s)| (v - m) / s)
                    .collect()
            })
            .collect(),
        targets,
        weights,
    };

    let mut params = init_params(dim, classes, config, seed);
    let mut grad = params.clone();
    let mut adam = Adam::new(flat(&params).len());
    let mut loss_trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let obj = params.evaluate(&data, config.fit, config.entropy_strength, Some(&mut grad));
        loss_trace.push(obj.loss);
        let g = flat(&grad);
        adam.step(&mut flat_mut(&mut params), &g, config.learning_rate);
    }
    let fin = params.evaluate(&data, config.fit, config.entropy_strength, None);
    let tree = SoftTree {
        depth: config.depth,
        input_mean,
        input_scale,
        inner: params
            .gate_w
            .iter()
            .zip(&params.gate_b)
            .map(|(w, &b)| SoftNode {
                weights: w.clone(),
                bias: b,
                temperature: params.temperature,
            })
            .collect(),
        leaves: params.leaf_dists(),
        path_entropy: fin.entropy,
    };
    Ok(DistillResult {
        tree,
        loss_trace,
        final_fit_loss: fin.fit,
        final_mean_kl: fin.mean_kl,
        gate_entropy: fin.entropy,
    })
}

/// Distills `model`'s predictive distribution on `dataset` into a soft tree.
pub fn distill_tree<M: Classifier + ?Sized>(
    model: &M,
    dataset: &Dataset,
    config: &SoftTreeConfig,
    seed: u64,
) -> Result<DistillResult> {
    let targets = dataset
        .features
        .iter()
        .map(|x| model.predict_dist(x))
        .collect::<Result<Vec<_>>>()?;
    train_soft_tree(&dataset.features, &targets, None, config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data() -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let points: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.91).cos()])
            .collect();
        let targets = points
            .iter()
            .map(|p| {
                let a = sigmoid(p[0] - 0.3 * p[1]);
                let b = sigmoid(p[1]);
                vec![a * b, a * (1.0 - b), 1.0 - a]
            })
            .collect();
        let weights = (0..12).map(|i| 0.5 + (i % 3) as f64).collect();
        (points, targets, weights)
    }

    /// Central finite differences against the analytic gradient.
    #[test]
    fn gradient_matches_finite_differences() {
        let (points, targets, weights) = toy_data();
        let config = SoftTreeConfig {
            depth: 2,
            temperature: 0.7,
            ..Default::default()
        };
        let data = TrainingSet {
            inputs: points,
            targets: &targets,
            weights,
        };
        let fits = [
            TreeFit::Distribution,
            TreeFit::ClassProbability { class: 1 },
        ];
        for (fit, strength) in fits.iter().flat_map(|f| [(*f, 0.0), (*f, 0.3)]) {
            let params = init_params(2, 3, &config, 5);
            let mut grad = params.clone();
            params.evaluate(&data, fit, strength, Some(&mut grad));
            let analytic = flat(&grad);
            let base = flat(&params);
            for k in 0..base.len() {
                let h = 1e-6;
                let mut plus = params.clone();
                *flat_mut(&mut plus)[k] += h;
                let mut minus = params.clone();
                *flat_mut(&mut minus)[k] -= h;
                let fd = (plus.evaluate(&data, fit, strength, None).loss
                    - minus.evaluate(&data, fit, strength, None).loss)
                    / (2.0 * h);
                assert!(
                    (fd - analytic[k]).abs() < 1e-6 * (1.0 + fd.abs()),
                    "param {k} {fit:?} strength {strength}: fd {fd} vs analytic {}",
                    analytic[k]
                );
            }
        }
    }

    #[test]
    fn prediction_is_a_distribution() {
        let (points, targets, _) = toy_data();
        let res = train_soft_tree(
            &points,
            &targets,
            None,
            &SoftTreeConfig {
                epochs: 20,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let mut rng = rng::seeded(4);
        let normal = Normal::new(0.0, 3.0).unwrap();
        for _ in 0..1000 {
            let x = vec![normal.sample(&mut rng), normal.sample(&mut rng)];
            let p = res.tree.predict(&x);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        for leaf in &res.tree.leaves {
            assert!((leaf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn depth_out_of_range_is_rejected() {
        let (points, targets, _) = toy_data();
        for depth in [0, 7] {
            let cfg = SoftTreeConfig {
                depth,
                ..Default::default()
            };
            assert!(train_soft_tree(&points, &targets, None, &cfg, 0).is_err());
        }
    }

    #[test]
    fn training_reduces_the_objective() {
        let (points, targets, _) = toy_data();
        let res = train_soft_tree(&points, &targets, None, &SoftTreeConfig::default(), 2).unwrap();
        assert!(res.final_mean_kl < res.loss_trace[0]);
    }
}
