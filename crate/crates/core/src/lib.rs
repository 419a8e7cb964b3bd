//! Bayesian teaching as a generator of model explanations.
//!
//! An explanation `x` is chosen from a pool with probability proportional
//! to how strongly a formal learner, shown `x`, would infer the target
//! fact about the model, times a prior over explanations.

// `!(x >= 0.0)` rejects NaN along with negatives; index loops mirror the
// formulas in the numeric kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod error;
pub mod eval;
pub mod explainers;
pub mod learners;
pub mod math;
pub mod models;
pub mod oracle;
pub mod render;
pub mod report;
pub mod rng;
pub mod teacher;
pub mod teaching;

pub use error::{Error, ErrorClass, Result};
