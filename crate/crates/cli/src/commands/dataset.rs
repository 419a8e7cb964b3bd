use bt_core::models::{make_synthetic, save_csv, Dataset, GeneratorSpec, GroundTruth, Motif};
use serde::Serialize;

use crate::args::{DatasetCommand, GeneratorKind, ImportArgs, MakeArgs};
use crate::error::{need_seed, CliResult};
use crate::io::{load_dataset, read_json, Sink};

#[derive(Debug, Serialize)]
struct DatasetSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<GeneratorSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    csv: String,
    label_column: String,
    rows: usize,
    dim: usize,
    class_count: usize,
    class_counts: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    feature_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_names: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth: Option<GroundTruth>,
}

fn summary(ds: &Dataset, csv: String, label_column: String) -> DatasetSummary {
    DatasetSummary {
        spec: None,
        seed: None,
        csv,
        label_column,
        rows: ds.len(),
        dim: ds.dim(),
        class_count: ds.class_count,
        class_counts: ds.class_counts(),
        feature_names: ds.feature_names.clone(),
        label_names: ds.label_names.clone(),
        truth: None,
    }
}

pub fn run(cmd: DatasetCommand, sink: &Sink) -> CliResult<()> {
    match cmd {
        DatasetCommand::Make(a) => make(a, sink),
        DatasetCommand::Import(a) => import(a, sink),
    }
}

fn spec_from_flags(a: &MakeArgs, kind: GeneratorKind) -> GeneratorSpec {
    match kind {
        GeneratorKind::GaussianBlobs => GeneratorSpec::GaussianBlobs {
            classes: a.classes,
            dim: a.dim,
            per_class: a.per_class,
            separation: a.separation,
        },
        GeneratorKind::TwoMoons => GeneratorSpec::TwoMoons {
            n: a.n,
            noise: a.noise,
        },
        GeneratorKind::GridImage => GeneratorSpec::GridImage {
            classes: a.classes,
            side: a.side,
            motif: Motif::Corners,
            per_class: a.per_class,
            noise: a.noise,
        },
    }
}

fn make(a: MakeArgs, sink: &Sink) -> CliResult<()> {
    let seed = need_seed(a.seed, "dataset make")?;
    let spec = match (&a.spec, a.kind) {
        (Some(path), _) => read_json(path)?,
        (None, Some(kind)) => spec_from_flags(&a, kind),
        (None, None) => unreachable!("clap requires --kind or --spec"),
    };
    let synth = make_synthetic(&spec, seed)?;
    save_csv(&synth.dataset, &a.csv, &a.label_column)?;
    let mut s = summary(&synth.dataset, a.csv.display().to_string(), a.label_column);
    s.spec = Some(spec);
    s.seed = Some(seed);
    s.truth = Some(synth.truth);
    sink.emit_json(&s)
}

fn import(a: ImportArgs, sink: &Sink) -> CliResult<()> {
    let ds = load_dataset(&a.csv, &a.label_column)?;
    sink.emit_json(&summary(&ds, a.csv.display().to_string(), a.label_column))
}
