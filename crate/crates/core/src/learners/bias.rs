use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::teaching::{Explanation, Learner, TargetInference};

/// Confirmation bias: the explainee favours targets they already believe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    /// Exponent on the prior belief; 0 disables the bias.
    pub confirmation_strength: f64,
    /// Candidate targets the prior belief is defined over.
    pub candidates: Vec<TargetInference>,
    pub prior_belief: Vec<f64>,
}

impl BiasConfig {
    pub fn none() -> Self {
        Self {
            confirmation_strength: 0.0,
            candidates: Vec::new(),
            prior_belief: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.confirmation_strength >= 0.0 && self.confirmation_strength.is_finite()) {
            return Err(Error::InvalidArgument(
                "confirmation strength must be finite and nonnegative".into(),
            ));
        }
        if self.candidates.len() != self.prior_belief.len() {
            return Err(Error::InvalidArgument(
                "prior belief needs one entry per candidate".into(),
            ));
        }
        if !self.prior_belief.is_empty() {
            let s: f64 = self.prior_belief.iter().sum();
            if self.prior_belief.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(
                    "prior belief must be a probability vector".into(),
                ));
            }
        }
        Ok(())
    }

    /// Prior belief in `theta`; targets outside the candidate list get 0.
    pub fn belief(&self, theta: &TargetInference) -> f64 {
        self.candidates
            .iter()
            .position(|c| c == theta)
            .map(|i| self.prior_belief[i])
            .unwrap_or(0.0)
    }
}

/// `base(theta, x) * prior_belief(theta)^strength`.
#[derive(Debug, Clone)]
pub struct BiasedLearner<L> {
    pub base: L,
    pub bias: BiasConfig,
    id: String,
}

pub fn biased_learner<L: Learner>(base: L, bias: BiasConfig) -> Result<BiasedLearner<L>> {
    bias.validate()?;
    let id = format!("biased({})", base.id());
    Ok(BiasedLearner { base, bias, id })
}

impl<L: Learner> Learner for BiasedLearner<L> {
    fn id(&self) -> &str {
        &self.id
    }

    fn log_likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let base = self.base.log_likelihood(theta, x)?;
        let g = self.bias.confirmation_strength;
        if g == 0.0 {
            return Ok(base);
        }
        Ok(base + g * self.bias.belief(theta).ln())
    }

    fn likelihood(&self, theta: &TargetInference, x: &Explanation) -> Result<f64> {
        let base = self.base.likelihood(theta, x)?;
        let g = self.bias.confirmation_strength;
        if g == 0.0 {
            return Ok(base);
        }
        Ok(base * self.bias.belief(theta).powf(g))
    }
}

/// The explainee's normalized belief over `candidates` after seeing `x`,
/// starting from a uniform belief.
pub fn belief_over_candidates<L: Learner + ?Sized>(
    learner: &L,
    candidates: &[TargetInference],
    x: &Explanation,
) -> Result<Vec<f64>> {
    let logs = candidates
        .iter()
        .map(|t| learner.log_likelihood(t, x))
        .collect::<Result<Vec<_>>>()?;
    let z = logsumexp(&logs);
    if z == f64::NEG_INFINITY {
        return Err(Error::AllZeroMass);
    }
    Ok(logs.iter().map(|l| (l - z).exp()).collect())
}
