use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "bt",
    version,
    about = "Explanations chosen by modelling what the explainee will infer"
)]
pub struct Cli {
    /// Worker threads for candidate evaluation; results do not depend on it.
    #[arg(long, global = true, env = "BT_THREADS")]
    pub threads: Option<usize>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Record wall-clock time in explanation reports.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Generate or import datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train or describe target models.
    #[command(subcommand)]
    Model(ModelCommand),
    /// Explain a target model.
    #[command(subcommand)]
    Explain(ExplainCommand),
    /// Simulated-explainee studies.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Cross-check fast algorithms against brute-force references.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorKind {
    GaussianBlobs,
    TwoMoons,
    GridImage,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Draw a synthetic dataset and write it as CSV.
    Make(MakeArgs),
    /// Read a CSV dataset and summarize it.
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct MakeArgs {
    /// Generator; alternatively give a full JSON spec with --spec.
    #[arg(
        long,
        value_enum,
        required_unless_present = "spec",
        conflicts_with = "spec"
    )]
    pub kind: Option<GeneratorKind>,
    /// JSON generator spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 40)]
    pub per_class: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    /// Points for two-moons.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Image side for grid-image.
    #[arg(long, default_value_t = 8)]
    pub side: usize,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    #[arg(long)]
    pub csv: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    GaussianGenerative,
    Logistic,
    TinyMlp,
    Plda,
    LinearProbability,
}

#[derive(Debug, Subcommand)]
pub enum ModelCommand {
    /// Train a target model and write its checkpoint.
    Fit(FitArgs),
    /// Describe a checkpoint, with accuracy when data is given.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Required for families trained from a random start.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with fit hyperparameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RenderFormat {
    Pgm,
    Svg,
}

/// Flags every explainer accepts.
#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Training or reference data as CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// CSV whose first row is the point to explain.
    #[arg(long, conflicts_with = "row")]
    pub point: Option<PathBuf>,
    /// Explain this row of --data instead of a --point file.
    #[arg(long)]
    pub row: Option<usize>,
    /// Class the explanation is about; defaults to the predicted label.
    #[arg(long)]
    pub class: Option<usize>,
    /// Required whenever the method draws random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub render: Option<RenderFormat>,
    /// Render path; defaults to next to --out, or `<method>.<ext>`.
    #[arg(long)]
    pub render_out: Option<PathBuf>,
    /// Saliency grid as WIDTHxHEIGHT; defaults to a square when possible.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleStrategyArg {
    ExhaustiveMax,
    Greedy,
    Mh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    Joint,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Zeros,
    Mean,
}

#[derive(Debug, Subcommand)]
pub enum ExplainCommand {
    /// Example sets chosen for a PLDA learner.
    PldaExamples(PldaExamplesArgs),
    /// MMD prototypes and criticisms.
    MmdCritic(MmdCriticArgs),
    /// Randomized-mask saliency.
    Rise(RiseArgs),
    /// Kernel SHAP attributions.
    Shap(ShapArgs),
    /// Local linear surrogate.
    Lime(LimeArgs),
    /// Soft decision tree distilled from the model.
    TreeDistill(TreeArgs),
    /// An explainer assembled from a target kind, medium, learner and strategy.
    Recombine(RecombineArgs),
}

#[derive(Debug, Args)]
pub struct PldaExamplesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 2)]
    pub per_class: usize,
    #[arg(long, value_enum, default_value = "exhaustive-max")]
    pub strategy: ExampleStrategyArg,
    /// Recorded Metropolis steps.
    #[arg(long, default_value_t = 20000)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub burn_in: usize,
    #[arg(long, value_enum, default_value = "joint")]
    pub coupling: CouplingArg,
}

#[derive(Debug, Args)]
pub struct MmdCriticArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 4)]
    pub prototypes: usize,
    #[arg(long, default_value_t = 2)]
    pub criticisms: usize,
    /// Kernel bandwidth; defaults to the median pairwise distance.
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RiseArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 4000)]
    pub masks: usize,
    /// Probability that a feature is shown.
    #[arg(long, default_value_t = 0.5)]
    pub keep: f64,
    #[arg(long, value_enum, default_value = "zeros")]
    pub baseline: BaselineArg,
}

#[derive(Debug, Args)]
pub struct ShapArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Background sample CSV; defaults to --data, else the origin.
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// Enumerate every coalition (the default).
    #[arg(long, conflicts_with = "samples")]
    pub exact: bool,
    /// Draw this many coalitions instead.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct LimeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
    #[arg(long, default_value_t = 2000)]
    pub probes: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub ridge: f64,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 400)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// Strength of the routing-entropy prior.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct RecombineArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Target inference kind, e.g. predicted-label.
    #[arg(long)]
    pub theta: String,
    /// Explanation medium, e.g. example-set.
    #[arg(long)]
    pub explanation: String,
    /// Learner model, e.g. nearest-example.
    #[arg(long)]
    pub learner: String,
    /// Teacher strategy: exhaustive-max, greedy, mh-sample or mc-expectation.
    #[arg(long, default_value = "exhaustive-max")]
    pub strategy: String,
    #[arg(long, default_value_t = 20000)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub burn_in: usize,
    /// JSON file with explainer parameters; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub keep: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum StudyCommand {
    /// Run a study described by a JSON config.
    Run(StudyRunArgs),
}

#[derive(Debug, Args)]
pub struct StudyRunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Calibration plot format (svg only).
    #[arg(long, value_enum)]
    pub render: Option<RenderFormat>,
    #[arg(long)]
    pub render_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Run oracle cross-checks and print a pass table.
    Check(OracleArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smaller case counts, for smoke runs.
    #[arg(long)]
    pub quick: bool,
}
