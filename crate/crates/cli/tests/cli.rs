//! The `bt` binary end to end: outputs validate against the shipped
//! schemas, and failures map to the documented exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

use bt_core::models::TargetModel;
use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn bt(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_bt"))
        .current_dir(dir)
        .env_remove("BT_THREADS")
        .args(args)
        .output()
        .expect("bt runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let r = bt(dir, args);
    assert_eq!(r.code, 0, "bt {args:?} failed: {}", r.stderr);
    serde_json::from_str(&r.stdout).unwrap()
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_valid(schema: &str, doc: &Value) {
    let text = std::fs::read_to_string(schema_dir().join(schema)).unwrap();
    let validator = jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{schema}: {errors:#?}");
}

fn assert_fails(dir: &Path, args: &[&str], code: i32, kind: &str) {
    let r = bt(dir, args);
    assert_eq!(r.code, code, "bt {args:?}: {}", r.stderr);
    assert!(r.stdout.is_empty() || code == 4);
    let err: Value = serde_json::from_str(r.stderr.trim()).unwrap();
    assert_valid("error.schema.json", &err);
    assert_eq!(err["error"], kind, "{err}");
}

/// Blobs with a PLDA model, and an 8x8 corner-motif image set with a
/// logistic model.
fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "dataset",
            "make",
            "--kind",
            "gaussian-blobs",
            "--classes",
            "3",
            "--per-class",
            "8",
            "--separation",
            "1.5",
            "--seed",
            "2",
            "--csv",
            "blobs.csv",
        ],
    );
    bt(
        d,
        &[
            "model",
            "fit",
            "--data",
            "blobs.csv",
            "--family",
            "plda",
            "--out",
            "plda.json",
        ],
    );
    ok(
        d,
        &[
            "dataset",
            "make",
            "--kind",
            "grid-image",
            "--classes",
            "2",
            "--side",
            "3",
            "--per-class",
            "20",
            "--seed",
            "3",
            "--csv",
            "grid.csv",
        ],
    );
    bt(
        d,
        &[
            "model",
            "fit",
            "--data",
            "grid.csv",
            "--family",
            "logistic",
            "--out",
            "grid.json",
        ],
    );
    dir
}

#[test]
fn dataset_and_model_outputs_validate() {
    let dir = workspace();
    let d = dir.path();
    let made = ok(
        d,
        &[
            "dataset",
            "make",
            "--kind",
            "two-moons",
            "--n",
            "60",
            "--seed",
            "1",
            "--csv",
            "moons.csv",
        ],
    );
    assert_valid("dataset-summary.schema.json", &made);
    assert_eq!(made["rows"], 60);
    let imported = ok(d, &["dataset", "import", "--csv", "moons.csv"]);
    assert_valid("dataset-summary.schema.json", &imported);
    assert_eq!(imported["class_counts"], made["class_counts"]);

    let mlp = ok(
        d,
        &[
            "model",
            "fit",
            "--data",
            "moons.csv",
            "--family",
            "tiny-mlp",
            "--seed",
            "4",
            "--epochs",
            "20",
            "--hidden",
            "8,4",
        ],
    );
    assert_valid("checkpoint.schema.json", &mlp);
    assert_eq!(mlp["config"]["hidden"], serde_json::json!([8, 4]));
    for f in ["plda.json", "grid.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(d.join(f)).unwrap()).unwrap();
        assert_valid("checkpoint.schema.json", &v);
    }
    let inspect = ok(
        d,
        &[
            "model",
            "inspect",
            "--model",
            "grid.json",
            "--data",
            "grid.csv",
        ],
    );
    assert_valid("model-summary.schema.json", &inspect);
    assert!(inspect["accuracy"].as_f64().unwrap() > 0.9);
    assert_valid("fit-config.schema.json", &inspect["config"]);
}

#[test]
fn every_explainer_report_validates() {
    let dir = workspace();
    let d = dir.path();
    let blobs = ["--model", "plda.json", "--data", "blobs.csv"];
    let grid = ["--model", "grid.json", "--data", "grid.csv", "--row", "25"];
    let runs: Vec<Vec<&str>> = vec![
        [
            &["explain", "plda-examples"][..],
            &blobs,
            &["--per-class", "1"],
        ]
        .concat(),
        [
            &["explain", "plda-examples"][..],
            &blobs,
            &[
                "--strategy",
                "mh",
                "--n",
                "2000",
                "--burn-in",
                "100",
                "--seed",
                "3",
            ],
        ]
        .concat(),
        [
            &["explain", "mmd-critic"][..],
            &blobs,
            &["--class", "1", "--prototypes", "3", "--criticisms", "2"],
        ]
        .concat(),
        [
            &["explain", "rise"][..],
            &grid,
            &["--masks", "500", "--seed", "1", "--render", "pgm"],
        ]
        .concat(),
        [
            &["explain", "shap"][..],
            &grid,
            &["--exact", "--render", "svg"],
        ]
        .concat(),
        [
            &["explain", "shap"][..],
            &grid,
            &["--samples", "300", "--seed", "2"],
        ]
        .concat(),
        [
            &["explain", "lime"][..],
            &grid,
            &["--seed", "3", "--probes", "500"],
        ]
        .concat(),
        [
            &["explain", "tree-distill"][..],
            &blobs,
            &[
                "--seed", "1", "--depth", "2", "--epochs", "30", "--render", "svg",
            ],
        ]
        .concat(),
        [
            &["explain", "recombine"][..],
            &blobs,
            &[
                "--row",
                "3",
                "--theta",
                "predicted-label",
                "--explanation",
                "example-set",
                "--learner",
                "nearest-example",
                "--per-class",
                "1",
            ],
        ]
        .concat(),
        [
            &["explain", "recombine"][..],
            &grid,
            &[
                "--theta",
                "predicted-label",
                "--explanation",
                "feature-mask",
                "--learner",
                "masked-prediction",
                "--strategy",
                "mh-sample",
                "--n",
                "300",
                "--burn-in",
                "50",
                "--seed",
                "5",
            ],
        ]
        .concat(),
        [
            &["explain", "recombine"][..],
            &grid,
            &[
                "--theta",
                "local-decision-boundary",
                "--explanation",
                "linear-weights",
                "--learner",
                "surrogate-fit",
                "--seed",
                "6",
                "--probes",
                "200",
            ],
        ]
        .concat(),
        [
            &["explain", "recombine"][..],
            &blobs,
            &[
                "--theta",
                "latent-class-means",
                "--explanation",
                "example-set",
                "--learner",
                "plda",
                "--strategy",
                "greedy",
                "--per-class",
                "1",
            ],
        ]
        .concat(),
    ];
    for args in &runs {
        let report = ok(d, args);
        assert_valid("explanation-report.schema.json", &report);
        assert_eq!(report["method"], args[1]);
    }
    assert!(std::fs::read(d.join("rise.pgm"))
        .unwrap()
        .starts_with(b"P5\n3 3\n255\n"));
    assert!(std::fs::read_to_string(d.join("shap.svg"))
        .unwrap()
        .starts_with("<svg"));
    assert!(std::fs::read_to_string(d.join("tree-distill.svg"))
        .unwrap()
        .contains("leaf 0 class 0"));
}

#[test]
fn timing_is_opt_in() {
    let dir = workspace();
    let d = dir.path();
    let args = [
        "explain",
        "shap",
        "--model",
        "grid.json",
        "--data",
        "grid.csv",
        "--row",
        "0",
    ];
    assert!(ok(d, &args).get("runtime_ms").is_none());
    let timed = ok(d, &[&args[..], &["--timing"]].concat());
    assert!(timed["runtime_ms"].is_u64());
    assert_valid("explanation-report.schema.json", &timed);
}

#[test]
fn exact_shap_on_a_linear_model_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let w = [0.1, -0.05, 0.08, 0.02];
    let model = TargetModel::linear_probability(w.to_vec(), 0.5);
    std::fs::write(d.join("linear.json"), model.to_json().unwrap()).unwrap();
    let background = [
        [0.2, -0.4, 0.9, 0.0],
        [-1.0, 0.3, 0.1, 0.5],
        [0.6, 0.8, -0.7, -0.2],
    ];
    let mut csv = String::from("a,b,c,d\n");
    for row in &background {
        csv += &row.map(|v| v.to_string()).join(",");
        csv.push('\n');
    }
    std::fs::write(d.join("background.csv"), csv).unwrap();
    let x = [0.7, -0.9, 0.4, 1.0];
    std::fs::write(
        d.join("p.csv"),
        format!("a,b,c,d\n{}\n", x.map(|v| v.to_string()).join(",")),
    )
    .unwrap();
    let report = ok(
        d,
        &[
            "explain",
            "shap",
            "--model",
            "linear.json",
            "--point",
            "p.csv",
            "--background",
            "background.csv",
            "--exact",
            "--class",
            "1",
        ],
    );
    let phi: Vec<f64> = report["explanation"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for j in 0..4 {
        let mean = background.iter().map(|r| r[j]).sum::<f64>() / 3.0;
        assert!((phi[j] - w[j] * (x[j] - mean)).abs() < 1e-6);
    }
    assert!(
        report["diagnostics"]["efficiency_gap"]
            .as_f64()
            .unwrap()
            .abs()
            < 1e-10
    );
}

#[test]
fn study_outputs_validate() {
    let dir = workspace();
    let d = dir.path();
    let queries = r#"{"generate": {"kind": "gaussian-blobs", "classes": 3, "dim": 2, "per_class": 50, "separation": 1.5}, "seed": 7}"#;
    let configs = [
        format!(
            r#"{{"experiment": "example-selection", "model": {{"checkpoint": "plda.json"}}, "data": {{"csv": "blobs.csv"}}, "queries": {queries}, "study": {{"trials": 200, "random_sets": 50}}, "thresholds": [{{"metric": "/teacher_accuracy", "min": 0.0}}]}}"#
        ),
        format!(
            r#"{{"experiment": "example-size", "model": {{"fit": "plda"}}, "data": {{"csv": "blobs.csv"}}, "queries": {queries}, "sizes": [1, 2], "study": {{"trials": 100, "random_sets": 20}}}}"#
        ),
        format!(
            r#"{{"experiment": "bias", "model": {{"checkpoint": "plda.json"}}, "data": {{"csv": "blobs.csv"}}, "queries": {queries}, "study": {{"trials": 100, "random_sets": 20}}, "strength": 2.0, "wrong_mass": 3.0, "thresholds": [{{"metric": "/accuracy_difference/0", "max": 0.0}}]}}"#
        ),
        r#"{"experiment": "strategy-comparison", "rival_belief": 0.5, "n": 5000, "burn_in": 500}"#
            .to_string(),
    ];
    for (i, c) in configs.iter().enumerate() {
        let path = format!("study{i}.json");
        std::fs::write(d.join(&path), c).unwrap();
        let render: &[&str] = if i == 0 || i == 2 {
            &["--render", "svg"]
        } else {
            &[]
        };
        let report = ok(
            d,
            &[
                &["study", "run", "--config", &path, "--seed", "1"][..],
                render,
            ]
            .concat(),
        );
        assert_valid("study-report.schema.json", &report);
        assert_eq!(
            report["thresholds_passed"], true,
            "{}",
            report["thresholds"]
        );
    }
    assert!(std::fs::read_to_string(d.join("calibration.svg"))
        .unwrap()
        .contains("confidence"));
}

#[test]
fn oracle_report_validates() {
    let dir = TempDir::new().unwrap();
    let report = ok(
        dir.path(),
        &["oracle", "check", "--suite", "shap", "--quick"],
    );
    assert_valid("oracle-report.schema.json", &report);
    assert_eq!(report["passed"], true);
}

#[test]
fn usage_errors_exit_2() {
    let dir = workspace();
    let d = dir.path();
    assert_fails(
        d,
        &[
            "explain",
            "rise",
            "--model",
            "grid.json",
            "--data",
            "grid.csv",
            "--row",
            "0",
        ],
        2,
        "UsageError",
    );
    assert_fails(
        d,
        &["explain", "lime", "--model", "grid.json", "--bogus"],
        2,
        "UsageError",
    );
    assert_fails(
        d,
        &["explain", "shap", "--model", "grid.json"],
        2,
        "UsageError",
    );
    assert_fails(
        d,
        &["dataset", "make", "--kind", "two-moons", "--csv", "x.csv"],
        2,
        "UsageError",
    );
    assert_fails(
        d,
        &[
            "explain",
            "recombine",
            "--model",
            "plda.json",
            "--data",
            "blobs.csv",
            "--theta",
            "latent-class-means",
            "--explanation",
            "example-set",
            "--learner",
            "mmd",
        ],
        2,
        "IncompatibleCombination",
    );
    assert_fails(
        d,
        &[
            "explain",
            "plda-examples",
            "--model",
            "plda.json",
            "--data",
            "blobs.csv",
            "--render",
            "pgm",
        ],
        2,
        "UsageError",
    );
    assert_fails(
        d,
        &["oracle", "check", "--suite", "everything"],
        2,
        "UsageError",
    );
    assert!(!d.join("plda-examples.pgm").exists());
}

#[test]
fn data_errors_exit_3() {
    let dir = workspace();
    let d = dir.path();
    assert_fails(d, &["dataset", "import", "--csv", "missing.csv"], 3, "Io");
    std::fs::write(d.join("bad.csv"), "a,b,label\n1,oops,0\n2,3,1\n").unwrap();
    assert_fails(
        d,
        &["dataset", "import", "--csv", "bad.csv"],
        3,
        "NonNumericFeature",
    );
    std::fs::write(d.join("wide.csv"), "a,b,c\n1,2,3\n").unwrap();
    assert_fails(
        d,
        &[
            "explain",
            "shap",
            "--model",
            "grid.json",
            "--point",
            "wide.csv",
        ],
        3,
        "DimensionMismatch",
    );
}

#[test]
fn numerical_failures_exit_4() {
    let dir = workspace();
    let d = dir.path();
    assert_fails(
        d,
        &[
            "explain",
            "shap",
            "--model",
            "grid.json",
            "--data",
            "grid.csv",
            "--row",
            "0",
            "--samples",
            "1",
            "--seed",
            "1",
        ],
        4,
        "SingularSystem",
    );
}

#[test]
fn help_exits_cleanly() {
    let dir = TempDir::new().unwrap();
    let r = bt(dir.path(), &["--help"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("explain"));
}
