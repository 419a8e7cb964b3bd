use std::time::Instant;

use bt_core::explainers::{
    distill_tree, explain_by_examples, kernel_shap, lime_local, mmd_criticisms, mmd_prototypes,
    recombine, rise_saliency, ClassCoupling, Coalitions, Criticism, ExampleConfig, ExampleStrategy,
    LearnerId, LimeConfig, RecombineContext, RecombineParams, RiseConfig, SaliencyVector, SoftTree,
    SoftTreeConfig,
};
use bt_core::learners::KernelConfig;
use bt_core::models::{load_points, Classifier, Dataset, TargetModel};
use bt_core::render::{saliency_pgm, saliency_svg, tree_svg};
use bt_core::report::ExplanationReport;
use bt_core::teacher::Strategy;
use bt_core::teaching::{Explanation, ExplanationKind, TargetInference, TargetKind};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BaselineArg, CommonArgs, CouplingArg, ExampleStrategyArg, ExplainCommand, LimeArgs,
    MmdCriticArgs, PldaExamplesArgs, RecombineArgs, RenderFormat, RiseArgs, ShapArgs, TreeArgs,
};
use crate::error::{need_seed, CliError, CliResult};
use crate::io::{
    load_dataset, load_model, load_point, parse_grid, read_json, require, write_file, Sink,
};

/// What an explainer can draw.
enum Picture {
    Saliency(SaliencyVector),
    Tree(SoftTree),
    Nothing,
}

struct Inputs {
    model: TargetModel,
    data: Option<Dataset>,
    point: Option<Vec<f64>>,
}

impl Inputs {
    fn load(c: &CommonArgs) -> CliResult<Self> {
        let model = load_model(&c.model)?;
        let data = c
            .data
            .as_deref()
            .map(|p| load_dataset(p, &c.label_column))
            .transpose()?;
        let point = match (&c.point, c.row) {
            (Some(p), _) => Some(load_point(p, &c.label_column)?),
            (None, Some(r)) => {
                let ds = require(data.as_ref(), "--data", "--row")?;
                let row = ds.features.get(r).ok_or_else(|| {
                    CliError::usage(format!("--row {r} is past the {} data rows", ds.len()))
                })?;
                Some(row.clone())
            }
            (None, None) => None,
        };
        Ok(Self { model, data, point })
    }

    fn data(&self, method: &str) -> CliResult<&Dataset> {
        require(self.data.as_ref(), "--data", method)
    }

    fn point(&self, method: &str) -> CliResult<&[f64]> {
        Ok(require(self.point.as_ref(), "--point or --row", method)?)
    }

    /// The requested class, or the model's label at the point.
    fn class(&self, c: &CommonArgs, point: &[f64]) -> CliResult<usize> {
        match c.class {
            Some(k) if k < self.model.class_count() => Ok(k),
            Some(k) => Err(CliError::usage(format!(
                "--class {k} is out of range for {} classes",
                self.model.class_count()
            ))),
            None => Ok(self.model.predict_label(point)?),
        }
    }
}

pub fn run(cmd: ExplainCommand, sink: &Sink, timing: bool) -> CliResult<()> {
    let start = Instant::now();
    let (common, method, result) = match cmd {
        ExplainCommand::PldaExamples(a) => {
            let r = plda_examples(&a);
            (a.common, "plda-examples", r)
        }
        ExplainCommand::MmdCritic(a) => {
            let r = mmd_critic(&a);
            (a.common, "mmd-critic", r)
        }
        ExplainCommand::Rise(a) => {
            let r = rise(&a);
            (a.common, "rise", r)
        }
        ExplainCommand::Shap(a) => {
            let r = shap(&a);
            (a.common, "shap", r)
        }
        ExplainCommand::Lime(a) => {
            let r = lime(&a);
            (a.common, "lime", r)
        }
        ExplainCommand::TreeDistill(a) => {
            let r = tree(&a);
            (a.common, "tree-distill", r)
        }
        ExplainCommand::Recombine(a) => {
            let r = recombination(&a);
            (a.common, "recombine", r)
        }
    };
    let (mut report, picture) = result?;
    let render = render(&common, picture, method)?;
    if timing {
        report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    sink.emit(&report.to_json()?)?;
    if let Some((bytes, ext)) = render {
        let path = common
            .render_out
            .clone()
            .unwrap_or_else(|| sink.companion(method, ext));
        write_file(&path, &bytes)?;
    }
    Ok(())
}

fn render(
    c: &CommonArgs,
    picture: Picture,
    method: &str,
) -> CliResult<Option<(Vec<u8>, &'static str)>> {
    let Some(format) = c.render else {
        return Ok(None);
    };
    let grid = c.grid.as_deref().map(parse_grid).transpose()?;
    let out = match (picture, format) {
        (Picture::Saliency(s), RenderFormat::Pgm) => (saliency_pgm(&s, grid)?, "pgm"),
        (Picture::Saliency(s), RenderFormat::Svg) => (saliency_svg(&s, grid)?.into_bytes(), "svg"),
        (Picture::Tree(t), RenderFormat::Svg) => (tree_svg(&t).into_bytes(), "svg"),
        (Picture::Tree(_), RenderFormat::Pgm) => {
            return Err(CliError::usage("trees render as svg only"))
        }
        (Picture::Nothing, _) => {
            return Err(CliError::usage(format!(
                "{method} output has no picture to render"
            )))
        }
    };
    Ok(Some(out))
}

type Outcome = CliResult<(ExplanationReport, Picture)>;

fn plda_examples(a: &PldaExamplesArgs) -> Outcome {
    let c = &a.common;
    let inputs = Inputs::load(c)?;
    let ds = inputs.data("plda-examples")?;
    let strategy = match a.strategy {
        ExampleStrategyArg::ExhaustiveMax => ExampleStrategy::ExhaustiveMax,
        ExampleStrategyArg::Greedy => ExampleStrategy::Greedy,
        ExampleStrategyArg::Mh => ExampleStrategy::Mh {
            n: a.n,
            burn_in: a.burn_in,
        },
    };
    let seed = match strategy {
        ExampleStrategy::Mh { .. } => need_seed(c.seed, "Metropolis example selection")?,
        _ => c.seed.unwrap_or(0),
    };
    let config = ExampleConfig {
        per_class: a.per_class,
        strategy,
        coupling: match a.coupling {
            CouplingArg::Joint => ClassCoupling::Joint,
            CouplingArg::Independent => ClassCoupling::Independent,
        },
    };
    let sel = explain_by_examples(&inputs.model, ds, &config, seed)?;
    let labels: Vec<usize> = match &sel.explanation {
        Explanation::ExampleSet(rows) => rows.iter().map(|&r| ds.labels[r]).collect(),
        _ => Vec::new(),
    };
    let mut report = ExplanationReport::new("plda-examples", &config, c.seed, &sel.explanation)?
        .with_theta(&sel.theta)?
        .diagnostic("log_likelihood", sel.log_likelihood)?
        .diagnostic("space_size", sel.space_size)?
        .diagnostic("labels", labels)?;
    if let Some(m) = sel.posterior_mass {
        report = report.diagnostic("posterior_mass", m)?;
    }
    Ok((report, Picture::Nothing))
}

#[derive(Serialize)]
struct MmdExplanation {
    prototypes: Vec<usize>,
    criticisms: Vec<Criticism>,
}

fn mmd_critic(a: &MmdCriticArgs) -> Outcome {
    let c = &a.common;
    let inputs = Inputs::load(c)?;
    let ds = inputs.data("mmd-critic")?;
    let rows: Vec<usize> = match c.class {
        Some(k) if k < ds.class_count => ds.class_indices(k),
        Some(k) => {
            return Err(CliError::usage(format!(
                "--class {k} is out of range for {} classes",
                ds.class_count
            )))
        }
        None => (0..ds.len()).collect(),
    };
    let points: Vec<Vec<f64>> = rows.iter().map(|&r| ds.features[r].clone()).collect();
    let kernel = match a.bandwidth {
        Some(h) => KernelConfig::rbf(h)?,
        None => KernelConfig::median_heuristic(&points)?,
    };
    let protos = mmd_prototypes(&points, a.prototypes, &kernel)?;
    let crits = mmd_criticisms(&points, &protos.prototypes, a.criticisms, &kernel)?;
    let explanation = MmdExplanation {
        prototypes: protos.prototypes.iter().map(|&i| rows[i]).collect(),
        criticisms: crits
            .into_iter()
            .map(|k| Criticism {
                index: rows[k.index],
                witness: k.witness,
            })
            .collect(),
    };
    let config = json!({
        "class": c.class,
        "prototypes": a.prototypes,
        "criticisms": a.criticisms,
        "kernel": kernel,
    });
    let report = ExplanationReport::new("mmd-critic", config, c.seed, explanation)?
        .diagnostic("mmd2_trace", &protos.trace)?;
    Ok((report, Picture::Nothing))
}

fn rise(a: &RiseArgs) -> Outcome {
    let c = &a.common;
    let seed = need_seed(c.seed, "rise")?;
    let inputs = Inputs::load(c)?;
    let point = inputs.point("rise")?;
    let class = inputs.class(c, point)?;
    let baseline = match a.baseline {
        BaselineArg::Zeros => vec![0.0; point.len()],
        BaselineArg::Mean => inputs.data("a mean baseline")?.feature_mean(),
    };
    let config = RiseConfig {
        masks: a.masks,
        keep_prob: a.keep,
    };
    let result = rise_saliency(&inputs.model, point, class, &baseline, &config, seed)?;
    let report = ExplanationReport::new(
        "rise",
        json!({ "masks": a.masks, "keep_prob": a.keep, "baseline": baseline }),
        Some(seed),
        &result.saliency,
    )?
    .with_theta(TargetInference::label_at(class, point.to_vec()))?;
    Ok((report, Picture::Saliency(result.saliency)))
}

fn shap(a: &ShapArgs) -> Outcome {
    let c = &a.common;
    let inputs = Inputs::load(c)?;
    let point = inputs.point("shap")?;
    let (coalitions, seed) = match a.samples {
        Some(count) => (
            Coalitions::Sampled { count },
            need_seed(c.seed, "sampled coalitions")?,
        ),
        None => (Coalitions::Exact, c.seed.unwrap_or(0)),
    };
    let background = match (&a.background, &inputs.data) {
        (Some(p), _) => load_points(p, Some(&c.label_column))?,
        (None, Some(ds)) => ds.features.clone(),
        (None, None) => vec![vec![0.0; point.len()]],
    };
    let result = kernel_shap(&inputs.model, point, &background, c.class, coalitions, seed)?;
    let base = result.saliency.base_value.unwrap_or(0.0);
    let gap = result.saliency.values.iter().sum::<f64>() + base - result.output;
    let report = ExplanationReport::new(
        "shap",
        json!({ "coalitions": coalitions, "background_rows": background.len() }),
        c.seed,
        &result.saliency,
    )?
    .with_theta(TargetInference::label_at(result.class, point.to_vec()))?
    .diagnostic("output", result.output)?
    .diagnostic("coalitions_used", result.coalitions_used)?
    .diagnostic("efficiency_gap", gap)?;
    Ok((report, Picture::Saliency(result.saliency)))
}

fn lime(a: &LimeArgs) -> Outcome {
    let c = &a.common;
    let seed = need_seed(c.seed, "lime")?;
    let inputs = Inputs::load(c)?;
    let point = inputs.point("lime")?;
    let class = inputs.class(c, point)?;
    let theta = TargetInference::LocalDecisionBoundary {
        class,
        center: point.to_vec(),
        width: a.width,
    };
    let config = LimeConfig {
        probes: a.probes,
        ridge: a.ridge,
    };
    let weights = lime_local(&inputs.model, &theta, &config, seed)?;
    let picture = Picture::Saliency(SaliencyVector::raw(weights.weights.clone()));
    let report = ExplanationReport::new("lime", &config, Some(seed), &weights)?
        .with_theta(&theta)?
        .diagnostic("weighted_r2", weights.weighted_r2)?;
    Ok((report, picture))
}

fn tree(a: &TreeArgs) -> Outcome {
    let c = &a.common;
    let seed = need_seed(c.seed, "tree-distill")?;
    let inputs = Inputs::load(c)?;
    let ds = inputs.data("tree-distill")?;
    let config = SoftTreeConfig {
        depth: a.depth,
        epochs: a.epochs,
        learning_rate: a.lr,
        entropy_strength: a.beta,
        ..SoftTreeConfig::default()
    };
    let result = distill_tree(&inputs.model, ds, &config, seed)?;
    let report = ExplanationReport::new("tree-distill", &config, Some(seed), &result.tree)?
        .diagnostic("mean_kl", result.final_mean_kl)?
        .diagnostic("fit_loss", result.final_fit_loss)?
        .diagnostic("gate_entropy", result.gate_entropy)?
        .diagnostic("final_objective", result.loss_trace.last())?;
    Ok((report, Picture::Tree(result.tree)))
}

fn parse_kind<T: serde::de::DeserializeOwned>(
    flag: &str,
    value: &str,
    allowed: &str,
) -> CliResult<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| CliError::usage(format!("--{flag} {value:?} is not one of {allowed}")))
}

fn recombination(a: &RecombineArgs) -> Outcome {
    let c = &a.common;
    let theta: TargetKind = parse_kind(
        "theta",
        &a.theta,
        "predicted-label, predictive-distribution, latent-class-means, class-data-distribution, local-decision-boundary",
    )?;
    let medium: ExplanationKind = parse_kind(
        "explanation",
        &a.explanation,
        "example-set, feature-mask, saliency-vector, linear-weights, soft-tree",
    )?;
    let learner: LearnerId = a
        .learner
        .parse()
        .map_err(|e: bt_core::Error| CliError::usage(e.to_string()))?;
    let strategy = match a.strategy.as_str() {
        "exhaustive-max" => Strategy::ExhaustiveMax,
        "greedy" => Strategy::Greedy,
        "mh-sample" => Strategy::MhSample {
            n: a.n,
            burn_in: a.burn_in,
        },
        "mc-expectation" => Strategy::McExpectation { n: a.n },
        other => {
            return Err(CliError::usage(format!(
            "--strategy {other:?} is not one of exhaustive-max, greedy, mh-sample, mc-expectation"
        )))
        }
    };
    let combo = recombine(theta, medium, learner, strategy)?;
    let stochastic = matches!(
        strategy,
        Strategy::MhSample { .. } | Strategy::McExpectation { .. }
    ) || learner == LearnerId::SurrogateFit;
    let seed = if stochastic {
        need_seed(c.seed, &format!("{learner} with {}", strategy.name()))?
    } else {
        c.seed.unwrap_or(0)
    };
    let mut params: RecombineParams = match &a.params {
        Some(p) => read_json(p)?,
        None => RecombineParams::default(),
    };
    if c.class.is_some() {
        params.class = c.class;
    }
    if let Some(v) = a.per_class {
        params.per_class = v;
    }
    if let Some(v) = a.keep {
        params.keep_prob = v;
    }
    if let Some(v) = a.width {
        params.width = v;
    }
    if let Some(v) = a.probes {
        params.probes = v;
    }
    if let Some(v) = a.depth {
        params.tree.depth = v;
    }
    let inputs = Inputs::load(c)?;
    let ctx = RecombineContext {
        model: &inputs.model,
        dataset: inputs.data.as_ref(),
        point: inputs.point.as_deref(),
    };
    let out = combo.run(&ctx, &params, seed)?;
    let picture = match &out.explanation {
        Explanation::FeatureMask(m) => Picture::Saliency(SaliencyVector::raw(m.clone())),
        Explanation::SaliencyVector(s) => Picture::Saliency(s.clone()),
        Explanation::LinearWeights(w) => Picture::Saliency(SaliencyVector::raw(w.weights.clone())),
        Explanation::SoftTree(t) => Picture::Tree(t.clone()),
        Explanation::ExampleSet(_) => Picture::Nothing,
    };
    let mut report = ExplanationReport::new(
        "recombine",
        json!({ "recombination": combo, "params": params }),
        c.seed,
        &out.explanation,
    )?
    .with_theta(&out.theta)?
    .diagnostic("teacher", &out.diagnostics)?;
    if let Some(ll) = out.log_likelihood {
        report = report.diagnostic("log_likelihood", ll)?;
    }
    Ok((report, picture))
}
