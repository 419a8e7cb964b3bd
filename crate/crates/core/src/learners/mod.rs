//! Formal explainee models: how someone shown an explanation would infer
//! the target fact.

mod bias;
mod kernel;
mod masked;
mod nearest;
mod plda;
mod surrogate;

pub use bias::{belief_over_candidates, biased_learner, BiasConfig, BiasedLearner};
pub use kernel::{mmd2, witness, KernelConfig, KernelKind, MmdLearner};
pub use masked::{apply_mask, masked_prediction_likelihood, MaskedPredictionLearner};
pub use nearest::NearestExampleLearner;
pub use plda::{plda_posterior_over_means, PldaLearner};
pub use surrogate::{surrogate_fit_loss, surrogate_loss_against, Probes, SurrogateLearner};
