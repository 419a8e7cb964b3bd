use bt_core::models::{fit_model, Family, FitConfig, TargetModel};
use serde::Serialize;

use crate::args::{FamilyArg, FitArgs, InspectArgs, ModelCommand};
use crate::error::{need_seed, CliResult};
use crate::io::{load_dataset, load_model, read_json, Sink};

pub fn run(cmd: ModelCommand, sink: &Sink) -> CliResult<()> {
    match cmd {
        ModelCommand::Fit(a) => fit(a, sink),
        ModelCommand::Inspect(a) => inspect(a, sink),
    }
}

fn family(f: FamilyArg) -> Family {
    match f {
        FamilyArg::GaussianGenerative => Family::GaussianGenerative,
        FamilyArg::Logistic => Family::Logistic,
        FamilyArg::TinyMlp => Family::TinyMlp,
        FamilyArg::Plda => Family::Plda,
        FamilyArg::LinearProbability => Family::LinearProbability,
    }
}

fn fit(a: FitArgs, sink: &Sink) -> CliResult<()> {
    let family = family(a.family);
    // only the MLP starts from random weights
    let seed = match family {
        Family::TinyMlp => need_seed(a.seed, "fitting a tiny-mlp")?,
        _ => a.seed.unwrap_or(0),
    };
    let mut config: FitConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => FitConfig::default(),
    };
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = a.l2 {
        config.l2 = v;
    }
    if let Some(v) = a.hidden {
        config.hidden = v;
    }
    let ds = load_dataset(&a.data, &a.label_column)?;
    let model = fit_model(family, &ds, &config, seed)?;
    let mut text = model.to_json()?;
    text.push('\n');
    sink.emit(&text)
}

#[derive(Debug, Serialize)]
struct ModelSummary {
    family: Family,
    class_count: usize,
    dim: usize,
    seed: u64,
    config: FitConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epochs_run: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
}

fn inspect(a: InspectArgs, sink: &Sink) -> CliResult<()> {
    let model: TargetModel = load_model(&a.model)?;
    let (accuracy, rows) = match &a.data {
        Some(p) => {
            let ds = load_dataset(p, &a.label_column)?;
            (Some(model.accuracy(&ds)?), Some(ds.len()))
        }
        None => (None, None),
    };
    sink.emit_json(&ModelSummary {
        family: model.family(),
        class_count: model.class_count,
        dim: model.dim,
        seed: model.seed,
        final_loss: model.loss_trace.last().copied(),
        epochs_run: (!model.loss_trace.is_empty()).then_some(model.loss_trace.len()),
        config: model.config,
        accuracy,
        rows,
    })
}
