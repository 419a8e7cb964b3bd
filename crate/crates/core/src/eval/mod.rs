//! Simulated-explainee validation: forced-choice studies, fidelity of a
//! learner model against a reference, and rank-order independence.

pub mod experiments;
pub mod fidelity;
pub mod ranks;
pub mod study;

pub use experiments::{
    example_bias_study, example_selection_study, example_size_study, label_questions,
    mismatch_fixture, paired_bias_study, random_example_set, strategy_comparison, wrong_prior_bias,
    ExampleStudyConfig, ExampleStudyReport, MismatchFixture, PairedBiasReport, SizeStudyReport,
    StrategyComparison,
};
pub use fidelity::{fidelity_check, DecileFidelity, FidelityReport};
pub use ranks::{rank_order_independence, spearman, RankReport};
pub use study::{
    simulate_2afc, CalibrationBin, Member, Question, SimulatedStudy, StudyReport, Task, TaskResult,
};
