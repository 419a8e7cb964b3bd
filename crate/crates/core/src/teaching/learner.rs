use super::types::{Explanation, TargetInference};
use crate::error::{Error, Result};

/// A formal model of how an explainee infers the target from an
/// explanation: `P_L(theta | x)`.
///
/// Implementations must be pure. Anything stochastic is derived from seeds
/// held in the learner itself, so the same `(theta, x)` always scores the
/// same.
pub trait Learner: Send + Sync {
    /// Identifier naming which learner this is (used in reports).
    fn id(&self) -> &str;

    /// Natural log of the likelihood; `-inf` encodes zero.
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64>;

    /// Probability-space likelihood. Learners that compute a probability
    /// directly should override this so probability-space consumers never
    /// round-trip through a logarithm.
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.log_likelihood(theta, x)?.exp())
    }
}

impl<L: Learner + ?Sized> Learner for &L {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).log_likelihood(theta, x)
    }
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).likelihood(theta, x)
    }
}

impl<L: Learner + ?Sized> Learner for std::sync::Arc<L> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).log_likelihood(theta, x)
    }
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).likelihood(theta, x)
    }
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).log_likelihood(theta, x)
    }
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        (**self).likelihood(theta, x)
    }
}

pub(crate) fn checked_log(v: f64) -> Result<f64> {
    if v.is_nan() || v == f64::INFINITY {
        Err(Error::InvalidLikelihood(v))
    } else {
        Ok(v)
    }
}

pub(crate) fn checked_prob(v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidLikelihood(v))
    }
}

/// Same likelihood for every explanation.
#[derive(Debug, Clone)]
pub struct ConstantLearner {
    pub value: f64,
}

impl Learner for ConstantLearner {
    fn id(&self) -> &str {
        "constant"
    }
    fn log_likelihood(&self, _: &TargetInference, _: &Explanation) -> Result<f64> {
        checked_prob(self.value).map(f64::ln)
    }
    fn likelihood(&self, _: &TargetInference, _: &Explanation) -> Result<f64> {
        checked_prob(self.value)
    }
}

/// Likelihood lookup from a table indexed by explanation key.
///
/// Rows are target candidates (matched by equality), columns follow the
/// order of `keys`. Unknown explanations score zero.
#[derive(Debug, Clone)]
pub struct TableLearner {
    pub targets: Vec<TargetInference>,
    pub keys: Vec<super::types::ExplanationKey>,
    pub table: Vec<Vec<f64>>,
}

impl TableLearner {
    /// Single-target table over an explanation list.
    pub fn single(theta: TargetInference, items: &[Explanation], values: Vec<f64>) -> Self {
        Self {
            targets: vec![theta],
            keys: items
                .iter()
                .map(|x| x.key().expect("table learner needs discrete explanations"))
                .collect(),
            table: vec![values],
        }
    }
}

impl Learner for TableLearner {
    fn id(&self) -> &str {
        "table"
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.likelihood(theta, x)?.ln())
    }
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let row = self
            .targets
            .iter()
            .position(|t| t == theta)
            .ok_or_else(|| Error::InvalidArgument("target not in table".into()))?;
        let Some(key) = x.key() else {
            return Ok(0.0);
        };
        let v = self
            .keys
            .iter()
            .position(|k| *k == key)
            .map(|c| self.table[row][c])
            .unwrap_or(0.0);
        checked_prob(v)
    }
}

/// A learner scaled by a constant factor `c > 0`.
pub struct Scaled<L> {
    pub inner: L,
    pub factor: f64,
}

impl<L: Learner> Learner for Scaled<L> {
    fn id(&self) -> &str {
        self.inner.id()
    }
    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.inner.log_likelihood(theta, x)? + self.factor.ln())
    }
    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        Ok(self.inner.likelihood(theta, x)? * self.factor)
    }
}
