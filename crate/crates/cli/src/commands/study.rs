use std::path::{Path, PathBuf};

use bt_core::eval::{
    example_bias_study, example_selection_study, example_size_study, mismatch_fixture,
    strategy_comparison, CalibrationBin, ExampleStudyConfig,
};
use bt_core::models::{
    fit_model, load_csv, load_points, make_synthetic, Dataset, Family, FitConfig, GeneratorSpec,
    TargetModel,
};
use bt_core::render::calibration_svg;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{RenderFormat, StudyCommand, StudyRunArgs};
use crate::error::{need_seed, CliError, CliResult};
use crate::io::{write_file, Sink};

fn default_label_column() -> String {
    "label".into()
}

/// Rows to study: a CSV file or a generator run.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum DataSource {
    Csv {
        csv: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
    },
    Generate {
        generate: GeneratorSpec,
        seed: u64,
    },
}

impl DataSource {
    fn dataset(&self, base: &Path) -> CliResult<Dataset> {
        Ok(match self {
            DataSource::Csv { csv, label_column } => load_csv(base.join(csv), label_column)?,
            DataSource::Generate { generate, seed } => make_synthetic(generate, *seed)?.dataset,
        })
    }

    fn points(&self, base: &Path) -> CliResult<Vec<Vec<f64>>> {
        Ok(match self {
            DataSource::Csv { csv, label_column } => {
                load_points(base.join(csv), Some(label_column))?
            }
            DataSource::Generate { generate, seed } => {
                make_synthetic(generate, *seed)?.dataset.features
            }
        })
    }
}

/// A saved checkpoint, or a model fitted on the study's data.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum ModelSource {
    Checkpoint {
        checkpoint: PathBuf,
    },
    Fit {
        fit: Family,
        #[serde(default)]
        config: FitConfig,
        #[serde(default)]
        seed: u64,
    },
}

impl ModelSource {
    fn model(&self, base: &Path, data: &Dataset) -> CliResult<TargetModel> {
        Ok(match self {
            ModelSource::Checkpoint { checkpoint } => TargetModel::load(base.join(checkpoint))?,
            ModelSource::Fit { fit, config, seed } => fit_model(*fit, data, config, *seed)?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
enum Experiment {
    /// Teacher-chosen example sets against random ones.
    ExampleSelection {
        model: ModelSource,
        data: DataSource,
        queries: DataSource,
        #[serde(default)]
        study: ExampleStudyConfig,
    },
    /// The same comparison at several set sizes.
    ExampleSize {
        model: ModelSource,
        data: DataSource,
        queries: DataSource,
        sizes: Vec<usize>,
        #[serde(default)]
        study: ExampleStudyConfig,
    },
    /// Unbiased against wrong-prior biased explainees on the same tasks.
    Bias {
        model: ModelSource,
        data: DataSource,
        queries: DataSource,
        #[serde(default)]
        study: ExampleStudyConfig,
        strength: f64,
        wrong_mass: f64,
    },
    /// Maximizing against sampling teachers when the explainee differs from
    /// the teacher's learner model.
    StrategyComparison {
        rival_belief: f64,
        n: usize,
        burn_in: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Threshold {
    /// JSON pointer into the result, e.g. `/accuracy_gain`.
    metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct StudyConfig {
    #[serde(flatten)]
    experiment: Experiment,
    #[serde(default)]
    thresholds: Vec<Threshold>,
}

#[derive(Debug, Serialize)]
struct ThresholdResult {
    #[serde(flatten)]
    threshold: Threshold,
    value: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct StudyOutput {
    experiment: String,
    seed: u64,
    config: Value,
    result: Value,
    thresholds: Vec<ThresholdResult>,
    thresholds_passed: bool,
}

pub fn run(cmd: StudyCommand, sink: &Sink) -> CliResult<()> {
    let StudyCommand::Run(a) = cmd;
    study_run(a, sink)
}

fn experiment_name(raw: &Value) -> String {
    raw.get("experiment")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

fn study_run(a: StudyRunArgs, sink: &Sink) -> CliResult<()> {
    let seed = need_seed(a.seed, "study run")?;
    if a.render == Some(RenderFormat::Pgm) {
        return Err(CliError::usage("calibration plots render as svg only"));
    }
    let raw: Value = serde_json::from_str(&std::fs::read_to_string(&a.config)?)?;
    let config: StudyConfig = serde_json::from_value(raw.clone())
        .map_err(|e| CliError::usage(format!("study config: {e}")))?;
    let base = a.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let (result, calibration_at) = run_experiment(&config.experiment, &base, seed)?;

    let mut thresholds = Vec::new();
    for t in &config.thresholds {
        let value = result
            .pointer(&t.metric)
            .and_then(Value::as_f64)
            .ok_or_else(|| {
                CliError::usage(format!(
                    "threshold metric {:?} is not a number in the result",
                    t.metric
                ))
            })?;
        let passed = t.min.is_none_or(|m| value >= m) && t.max.is_none_or(|m| value <= m);
        thresholds.push(ThresholdResult {
            threshold: t.clone(),
            value,
            passed,
        });
    }
    let svg = match a.render {
        Some(_) => {
            let pointer = calibration_at
                .ok_or_else(|| CliError::usage("this experiment has no calibration plot"))?;
            let bins: Vec<CalibrationBin> =
                serde_json::from_value(result.pointer(pointer).cloned().unwrap_or_default())?;
            Some(calibration_svg(&bins))
        }
        None => None,
    };
    sink.emit_json(&StudyOutput {
        experiment: experiment_name(&raw),
        seed,
        config: raw,
        thresholds_passed: thresholds.iter().all(|t| t.passed),
        thresholds,
        result,
    })?;
    if let Some(svg) = svg {
        let path = a
            .render_out
            .unwrap_or_else(|| sink.companion("calibration", "svg"));
        write_file(&path, svg.as_bytes())?;
    }
    Ok(())
}

/// The result as JSON, and where its calibration bins sit, if anywhere.
fn run_experiment(
    e: &Experiment,
    base: &Path,
    seed: u64,
) -> CliResult<(Value, Option<&'static str>)> {
    Ok(match e {
        Experiment::ExampleSelection {
            model,
            data,
            queries,
            study,
        } => {
            let ds = data.dataset(base)?;
            let m = model.model(base, &ds)?;
            let r = example_selection_study(&m, &ds, &queries.points(base)?, study, seed)?;
            (serde_json::to_value(r)?, Some("/study/calibration"))
        }
        Experiment::ExampleSize {
            model,
            data,
            queries,
            sizes,
            study,
        } => {
            let ds = data.dataset(base)?;
            let m = model.model(base, &ds)?;
            let r = example_size_study(&m, &ds, &queries.points(base)?, sizes, study, seed)?;
            (serde_json::to_value(r)?, None)
        }
        Experiment::Bias {
            model,
            data,
            queries,
            study,
            strength,
            wrong_mass,
        } => {
            let ds = data.dataset(base)?;
            let m = model.model(base, &ds)?;
            let r = example_bias_study(
                &m,
                &ds,
                &queries.points(base)?,
                study,
                *strength,
                *wrong_mass,
                seed,
            )?;
            (serde_json::to_value(r)?, Some("/biased/calibration"))
        }
        Experiment::StrategyComparison {
            rival_belief,
            n,
            burn_in,
        } => {
            let (selector, evaluator, candidates, space) = mismatch_fixture(*rival_belief)?;
            let r = strategy_comparison(
                &selector,
                evaluator.as_ref(),
                &candidates,
                0,
                &space,
                *n,
                *burn_in,
                seed,
            )?;
            (serde_json::to_value(r)?, None)
        }
    })
}
