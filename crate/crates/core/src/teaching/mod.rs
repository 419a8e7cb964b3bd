//! The teacher posterior `P_T(x | theta) ∝ P_L(theta | x) P(x)`: evaluation
//! over enumerable spaces, argmax selection, i.i.d. sampling and Metropolis
//! sampling for spaces too large to enumerate.

mod learner;
mod mcmc;
mod posterior;
mod space;
mod types;

pub(crate) use learner::checked_prob;
pub use learner::{ConstantLearner, Learner, Scaled, TableLearner};
pub use mcmc::{mh_sample, McmcRun, Proposal};
pub use posterior::{
    sample_positions, sample_posterior, select_max, teacher_posterior, TeacherPosterior,
};
pub use space::{ExplanationSpace, Prior, SpaceDescriptor, ENUMERATION_LIMIT};
pub use types::{
    Explanation, ExplanationKey, ExplanationKind, LinearWeights, TargetInference, TargetKind,
};
