//! Target models to be explained, and the data they are trained on.

mod csv_io;
mod dataset;
mod families;
mod plda;
mod synthetic;

use serde::{Deserialize, Serialize};

pub use csv_io::{load_csv, load_points, read_csv, read_points, save_csv, write_csv};
pub use dataset::Dataset;
pub use families::{
    DenseLayer, GaussianGenerative, GaussianParams, LinearProbabilityParams, LogisticParams,
    MlpParams,
};
pub use plda::PldaParams;
pub use synthetic::{make_synthetic, GeneratorSpec, GroundTruth, Motif, Synthetic};

use crate::error::{check_dim, Error, Result};

/// Anything exposing a predictive distribution over classes.
pub trait Classifier: Send + Sync {
    fn class_count(&self) -> usize;
    fn dim(&self) -> usize;
    /// Probability vector at a finite point of dimension `dim()`.
    fn predict_dist(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(crate::math::argmax(&self.predict_dist(x)?))
    }
}

impl<C: Classifier + ?Sized> Classifier for &C {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn predict_dist(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict_dist(x)
    }
}

impl<C: Classifier + ?Sized> Classifier for std::sync::Arc<C> {
    fn class_count(&self) -> usize {
        (**self).class_count()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn predict_dist(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).predict_dist(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GaussianGenerative,
    Logistic,
    TinyMlp,
    Plda,
    LinearProbability,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown model family {s:?}")))
    }
}

/// Hyperparameters for every family; each family reads the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Ridge added to covariance estimates.
    pub ridge: f64,
    pub shared_covariance: bool,
    /// L2 penalty on weights (logistic, MLP, linear-probability).
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub hidden: Vec<usize>,
    /// PLDA latent dimension; defaults to `classes - 1`.
    pub latent_dim: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-6,
            shared_covariance: true,
            l2: 1e-2,
            learning_rate: 0.1,
            epochs: 500,
            hidden: vec![16],
            latent_dim: None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelParams {
    GaussianGenerative(GaussianGenerative),
    Logistic(LogisticParams),
    TinyMlp(MlpParams),
    Plda(PldaParams),
    LinearProbability(LinearProbabilityParams),
}

/// A trained classifier with the provenance needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Checkpoint", into = "Checkpoint")]
pub struct TargetModel {
    pub params: ModelParams,
    pub class_count: usize,
    pub dim: usize,
    pub config: FitConfig,
    pub seed: u64,
    /// Training objective per epoch, for gradient-trained families.
    pub loss_trace: Vec<f64>,
}

/// On-disk checkpoint layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub family: Family,
    pub class_count: usize,
    pub dim: usize,
    pub parameters: serde_json::Value,
    pub config: FitConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl From<TargetModel> for Checkpoint {
    fn from(m: TargetModel) -> Self {
        let (family, parameters) = match &m.params {
            ModelParams::GaussianGenerative(g) => {
                (Family::GaussianGenerative, serde_json::to_value(&g.params))
            }
            ModelParams::Logistic(p) => (Family::Logistic, serde_json::to_value(p)),
            ModelParams::TinyMlp(p) => (Family::TinyMlp, serde_json::to_value(p)),
            ModelParams::Plda(p) => (Family::Plda, serde_json::to_value(p)),
            ModelParams::LinearProbability(p) => {
                (Family::LinearProbability, serde_json::to_value(p))
            }
        };
        Checkpoint {
            family,
            class_count: m.class_count,
            dim: m.dim,
            parameters: parameters.expect("model parameters serialize"),
            config: m.config,
            seed: m.seed,
            loss_trace: m.loss_trace,
        }
    }
}

impl TryFrom<Checkpoint> for TargetModel {
    type Error = Error;
    fn try_from(c: Checkpoint) -> Result<Self> {
        let params = match c.family {
            Family::GaussianGenerative => ModelParams::GaussianGenerative(
                GaussianGenerative::from_params(serde_json::from_value(c.parameters)?)?,
            ),
            Family::Logistic => ModelParams::Logistic(serde_json::from_value(c.parameters)?),
            Family::TinyMlp => ModelParams::TinyMlp(serde_json::from_value(c.parameters)?),
            Family::Plda => ModelParams::Plda(serde_json::from_value(c.parameters)?),
            Family::LinearProbability => {
                ModelParams::LinearProbability(serde_json::from_value(c.parameters)?)
            }
        };
        Ok(TargetModel {
            params,
            class_count: c.class_count,
            dim: c.dim,
            config: c.config,
            seed: c.seed,
            loss_trace: c.loss_trace,
        })
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

impl TargetModel {
    pub fn family(&self) -> Family {
        match self.params {
            ModelParams::GaussianGenerative(_) => Family::GaussianGenerative,
            ModelParams::Logistic(_) => Family::Logistic,
            ModelParams::TinyMlp(_) => Family::TinyMlp,
            ModelParams::Plda(_) => Family::Plda,
            ModelParams::LinearProbability(_) => Family::LinearProbability,
        }
    }

    pub fn plda(&self) -> Option<&PldaParams> {
        match &self.params {
            ModelParams::Plda(p) => Some(p),
            _ => None,
        }
    }

    /// Fixture constructor: a two-class linear-probability model with given
    /// coefficients.
    pub fn linear_probability(weights: Vec<f64>, intercept: f64) -> Self {
        let dim = weights.len();
        TargetModel {
            params: ModelParams::LinearProbability(LinearProbabilityParams { weights, intercept }),
            class_count: 2,
            dim,
            config: FitConfig::default(),
            seed: 0,
            loss_trace: Vec::new(),
        }
    }

    pub fn from_logistic(params: LogisticParams) -> Self {
        let class_count = params.bias.len();
        let dim = params.weights[0].len();
        TargetModel {
            params: ModelParams::Logistic(params),
            class_count,
            dim,
            config: FitConfig::default(),
            seed: 0,
            loss_trace: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let mut hits = 0usize;
        for (x, &y) in ds.features.iter().zip(&ds.labels) {
            if self.predict_label(x)? == y {
                hits += 1;
            }
        }
        Ok(hits as f64 / ds.len() as f64)
    }
}

impl Classifier for TargetModel {
    fn class_count(&self) -> usize {
        self.class_count
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict_dist(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "point has non-finite coordinates".into(),
            ));
        }
        Ok(match &self.params {
            ModelParams::GaussianGenerative(g) => g.predict(x),
            ModelParams::Logistic(p) => p.predict(x),
            ModelParams::TinyMlp(p) => p.predict(x),
            ModelParams::Plda(p) => p.predict(x),
            ModelParams::LinearProbability(p) => p.predict(x),
        })
    }
}

pub fn predict_dist(model: &TargetModel, point: &[f64]) -> Result<Vec<f64>> {
    model.predict_dist(point)
}

/// Trains a target model. Closed-form families ignore the seed; gradient
/// families are bit-reproducible given `(dataset, config, seed)`.
pub fn fit_model(
    family: Family,
    dataset: &Dataset,
    config: &FitConfig,
    seed: u64,
) -> Result<TargetModel> {
    dataset.validate()?;
    let mut loss_trace = Vec::new();
    let params = match family {
        Family::GaussianGenerative => {
            ModelParams::GaussianGenerative(GaussianGenerative::fit(dataset, config)?)
        }
        Family::Plda => ModelParams::Plda(PldaParams::fit(dataset, config)?),
        Family::Logistic => {
            let (p, trace) = LogisticParams::fit(dataset, config);
            loss_trace = trace;
            ModelParams::Logistic(p)
        }
        Family::TinyMlp => {
            let (p, trace) = MlpParams::fit(dataset, config, seed);
            loss_trace = trace;
            ModelParams::TinyMlp(p)
        }
        Family::LinearProbability => {
            ModelParams::LinearProbability(LinearProbabilityParams::fit(dataset, config)?)
        }
    };
    Ok(TargetModel {
        params,
        class_count: dataset.class_count,
        dim: dataset.dim(),
        config: config.clone(),
        seed,
        loss_trace,
    })
}
