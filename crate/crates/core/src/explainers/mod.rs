//! Concrete explanation methods built on the teaching core.
pub mod examples;
pub mod lime;
pub mod recombine;
pub mod rise;
pub mod saliency;
pub mod shap;
pub mod soft_tree;

pub use examples::{
    explain_by_examples, mmd_criticisms, mmd_prototypes, ClassCoupling, Criticism, ExampleConfig,
    ExampleSelection, ExampleStrategy, PrototypeObjective, PrototypeSelection,
};
pub use lime::{lime_local, local_probes, weighted_ridge, LimeConfig};
pub use recombine::{
    recombine, strategies_for, LearnerId, Recombination, RecombineContext, RecombineOutput,
    RecombineParams,
};
pub use rise::{rise_as_teaching, rise_saliency, RiseConfig, RiseResult};
pub use saliency::{Normalization, SaliencyVector};
pub use shap::{kernel_shap, Coalitions, ShapResult};
pub use soft_tree::{
    distill_tree, train_soft_tree, DistillResult, SoftNode, SoftTree, SoftTreeConfig, TreeFit,
};
