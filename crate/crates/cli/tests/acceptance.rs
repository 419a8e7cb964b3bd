//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use bt_core::checks::{run_suite, CheckResult, Suite, SuiteSize};
use bt_core::eval::{
    example_bias_study, example_selection_study, random_example_set, ExampleStudyConfig,
};
use bt_core::explainers::{
    distill_tree, explain_by_examples, lime_local, mmd_criticisms, mmd_prototypes,
    rise_as_teaching, rise_saliency, ExampleConfig, ExampleStrategy, LimeConfig, RiseConfig,
    SoftTreeConfig,
};
use bt_core::learners::{
    belief_over_candidates, biased_learner, mmd2, BiasConfig, KernelConfig, NearestExampleLearner,
    PldaLearner,
};
use bt_core::models::{
    fit_model, make_synthetic, Dataset, Family, FitConfig, GeneratorSpec, ModelParams, Motif,
    TargetModel,
};
use bt_core::oracle::{best_prototypes_bruteforce, best_subset_bruteforce_log};
use bt_core::rng;
use bt_core::teaching::{
    Explanation, ExplanationKey, ExplanationSpace, Learner, SpaceDescriptor, TableLearner,
    TargetInference,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Box<dyn Fn() -> Outcome>);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

fn checks_pass(results: &[CheckResult]) -> Outcome {
    let summary: Vec<String> = results
        .iter()
        .map(|r| {
            format!(
                "{} {}/{} max_err={:.2e}",
                r.name,
                r.cases - r.failures,
                r.cases,
                r.max_error
            )
        })
        .collect();
    match results.iter().find(|r| !r.passed) {
        Some(r) => Err(format!(
            "{} failed {} of {} cases (max error {:.3e}, tolerance {:.1e})",
            r.name, r.failures, r.cases, r.max_error, r.tolerance
        )),
        None => Ok(summary.join("; ")),
    }
}

fn blobs(classes: usize, dim: usize, per_class: usize, separation: f64, seed: u64) -> Dataset {
    let spec = GeneratorSpec::GaussianBlobs {
        classes,
        dim,
        per_class,
        separation,
    };
    make_synthetic(&spec, seed).unwrap().dataset
}

fn posterior_correctness() -> Outcome {
    let start = Instant::now();
    let results = run_suite(Suite::Posterior, &SuiteSize::default(), 0).map_err(e)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(results[0].cases == 500, "expected 500 cases")?;
    ensure(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!("{} in {secs:.2}s", checks_pass(&results)?))
}

fn selection_consistency() -> Outcome {
    let mut results = run_suite(Suite::Selection, &SuiteSize::default(), 0).map_err(e)?;
    results.extend(run_suite(Suite::Mcmc, &SuiteSize::default(), 0).map_err(e)?);
    let summary = checks_pass(&results)?;

    // the largest example fixture: every 2-per-class subset of 3 x 8 points
    let ds = blobs(3, 2, 8, 1.5, 2);
    let model = fit_model(Family::Plda, &ds, &FitConfig::default(), 0).map_err(e)?;
    let config = ExampleConfig {
        per_class: 2,
        strategy: ExampleStrategy::ExhaustiveMax,
        coupling: Default::default(),
    };
    let sel = explain_by_examples(&model, &ds, &config, 0).map_err(e)?;
    let learner = PldaLearner::new(
        Arc::new(model.plda().unwrap().clone()),
        Arc::new(ds.clone()),
    );
    let space = ExplanationSpace::uniform(SpaceDescriptor::PerClassSubsets {
        pools: (0..3).map(|c| ds.class_indices(c)).collect(),
        size: 2,
    });
    let brute = best_subset_bruteforce_log(&learner, &sel.theta, &space).map_err(e)?;
    ensure(
        sel.explanation == brute,
        "example selection disagrees with brute force over 28^3 sets",
    )?;
    Ok(format!("{summary}; 21952-set example space agrees"))
}

fn shap_anchor() -> Outcome {
    checks_pass(&run_suite(Suite::Shap, &SuiteSize::default(), 0).map_err(e)?)
}

fn rise_identity() -> Outcome {
    let spec = GeneratorSpec::GridImage {
        classes: 2,
        side: 8,
        motif: Motif::Corners,
        per_class: 40,
        noise: 0.1,
    };
    let syn = make_synthetic(&spec, 3).map_err(e)?;
    let ds = syn.dataset;
    let model = fit_model(Family::Logistic, &ds, &FitConfig::default(), 0).map_err(e)?;
    let point = ds.features[ds.class_indices(1)[0]].clone();
    let baseline = vec![0.0; 64];
    let motif = &syn
        .truth
        .salient_pixels
        .ok_or("grid fixture has no ground truth")?[1];

    let small = RiseConfig {
        masks: 2000,
        keep_prob: 0.5,
    };
    let direct = rise_saliency(&model, &point, 1, &baseline, &small, 0).map_err(e)?;
    let taught = rise_as_teaching(&model, &point, 1, &baseline, &direct.masks).map_err(e)?;
    let gap = direct
        .saliency
        .values
        .iter()
        .zip(&taught)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ensure(gap <= 1e-12, format!("teaching form differs by {gap:.3e}"))?;

    let config = RiseConfig {
        masks: 10_000,
        keep_prob: 0.5,
    };
    let mut margins = Vec::new();
    for seed in 0..5 {
        let s = rise_saliency(&model, &point, 1, &baseline, &config, seed)
            .map_err(e)?
            .saliency
            .values;
        let on: Vec<f64> = motif.iter().map(|&j| s[j]).collect();
        let off: Vec<f64> = (0..64)
            .filter(|j| !motif.contains(j))
            .map(|j| s[j])
            .collect();
        let margin =
            on.iter().sum::<f64>() / on.len() as f64 - off.iter().sum::<f64>() / off.len() as f64;
        ensure(
            margin > 0.0,
            format!("seed {seed}: motif mean does not exceed background"),
        )?;
        margins.push(margin);
    }
    Ok(format!(
        "identity gap {gap:.1e}; motif minus background {margins:.4?}"
    ))
}

fn mmd_critic() -> Outcome {
    let kernel = KernelConfig::rbf(1.0).map_err(e)?;
    // 8 points around the origin, 4 far away
    let mut spread: Vec<Vec<f64>> = (0..8)
        .map(|i| vec![(i as f64 * 0.7).sin() * 0.3, (i as f64 * 1.3).cos() * 0.3])
        .collect();
    spread.extend((0..4).map(|i| {
        vec![
            6.0 + (i as f64).sin() * 0.3,
            6.0 + (i as f64 * 0.5).cos() * 0.3,
        ]
    }));

    let self_gap = mmd2(&spread, &spread, &kernel).map_err(e)?.abs();
    ensure(self_gap <= 1e-12, format!("mmd2(X, X) = {self_gap:.3e}"))?;

    let mut greedy = mmd_prototypes(&spread, 3, &kernel).map_err(e)?;
    ensure(
        greedy.trace.windows(2).all(|w| w[1] <= w[0]),
        format!("trace not monotone: {:?}", greedy.trace),
    )?;
    // greedy places prototypes across the clusters like the optimum does
    let (best, _) = best_prototypes_bruteforce(&spread, 3, &kernel);
    let far = |set: &[usize]| set.iter().filter(|&&i| i >= 8).count();
    ensure(
        far(&greedy.prototypes) == far(&best),
        format!(
            "greedy {:?} splits the clusters unlike {best:?}",
            greedy.prototypes
        ),
    )?;

    // two widely separated point-mass clusters: greedy reaches the optimum
    let mut masses = vec![vec![0.0, 0.0]; 8];
    masses.extend(vec![vec![6.0, 6.0]; 4]);
    greedy = mmd_prototypes(&masses, 3, &kernel).map_err(e)?;
    let (best, best_value) = best_prototypes_bruteforce(&masses, 3, &kernel);
    let mut chosen = greedy.prototypes.clone();
    chosen.sort_unstable();
    let greedy_value = *greedy.trace.last().unwrap();
    ensure(
        chosen == best && (greedy_value - best_value).abs() <= 1e-12,
        format!("greedy {chosen:?} ({greedy_value}) vs exhaustive {best:?} ({best_value})"),
    )?;

    // three tight clusters of four; prototypes cover only the first two
    let clusters: Vec<Vec<f64>> = (0..12)
        .map(|i| {
            let c = (i / 4) as f64 * 5.0;
            vec![c + 0.2 * (i as f64).sin(), 0.2 * (i as f64).cos()]
        })
        .collect();
    let crit = mmd_criticisms(&clusters, &[0, 1, 4, 5], 4, &kernel).map_err(e)?;
    let landed: Vec<usize> = crit.iter().map(|c| c.index).collect();
    ensure(
        landed.iter().all(|&i| i >= 8),
        format!("criticisms {landed:?} outside the omitted cluster"),
    )?;
    Ok(format!(
        "self {self_gap:.1e}; greedy {chosen:?} = exhaustive {best:?} (mmd2 {greedy_value:.1e}); criticisms {landed:?}"
    ))
}

fn angle_degrees(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).clamp(-1.0, 1.0).acos().to_degrees()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(a) * norm(b))
}

fn lime() -> Outcome {
    let ds = blobs(2, 3, 50, 6.0, 2);
    let fit = FitConfig {
        l2: 1e-2,
        ..Default::default()
    };
    let model = fit_model(Family::Logistic, &ds, &fit, 0).map_err(e)?;
    let ModelParams::Logistic(params) = &model.params else {
        return Err("expected a logistic model".into());
    };
    // two-class softmax: the class-1 probability moves along w1 - w0
    let gradient: Vec<f64> = params.weights[1]
        .iter()
        .zip(&params.weights[0])
        .map(|(a, b)| a - b)
        .collect();
    let theta = TargetInference::LocalDecisionBoundary {
        class: 1,
        center: ds.feature_mean(),
        width: 1.0,
    };
    let config = LimeConfig {
        probes: 2000,
        ..Default::default()
    };
    let mut angles = Vec::new();
    for seed in 0..5 {
        let lw = lime_local(&model, &theta, &config, seed).map_err(e)?;
        let angle = angle_degrees(&lw.weights, &gradient);
        ensure(
            angle < 5.0,
            format!("seed {seed}: {angle:.2} degrees off the gradient"),
        )?;
        angles.push(angle);
    }

    let coef = vec![0.03, -0.02, 0.015, 0.01];
    let linear = TargetModel::linear_probability(coef.clone(), 0.5);
    let theta = TargetInference::LocalDecisionBoundary {
        class: 1,
        center: vec![0.5, -0.5, 1.0, 0.0],
        width: 1.0,
    };
    let lw = lime_local(&linear, &theta, &config, 0).map_err(e)?;
    let cos = cosine(&lw.weights, &coef);
    ensure(cos >= 0.999, format!("linear target cosine {cos}"))?;
    Ok(format!(
        "logistic angles {angles:.3?} degrees; linear cosine {cos:.6}"
    ))
}

fn distillation() -> Outcome {
    let ds = blobs(3, 2, 60, 4.0, 1);
    let model = fit_model(Family::GaussianGenerative, &ds, &FitConfig::default(), 0).map_err(e)?;
    let plain = SoftTreeConfig::default();
    let prior = SoftTreeConfig {
        entropy_strength: 0.1,
        ..Default::default()
    };
    let mut report = Vec::new();
    for seed in [7, 8, 9] {
        let a = distill_tree(&model, &ds, &plain, seed).map_err(e)?;
        let b = distill_tree(&model, &ds, &prior, seed).map_err(e)?;
        ensure(
            a.final_mean_kl <= 0.05,
            format!("seed {seed}: mean KL {:.4}", a.final_mean_kl),
        )?;
        ensure(
            b.gate_entropy >= a.gate_entropy,
            format!(
                "seed {seed}: entropy {:.4} with prior < {:.4} without",
                b.gate_entropy, a.gate_entropy
            ),
        )?;
        report.push(format!(
            "seed {seed} kl {:.4} entropy {:.3} -> {:.3}",
            a.final_mean_kl, a.gate_entropy, b.gate_entropy
        ));
    }
    Ok(report.join("; "))
}

/// The blobs fixture for the example studies: training blobs, a PLDA model
/// and held-out queries.
fn example_fixture() -> (TargetModel, Dataset, Vec<Vec<f64>>) {
    let ds = blobs(3, 2, 8, 1.5, 2);
    let model = fit_model(Family::Plda, &ds, &FitConfig::default(), 0).unwrap();
    let queries = blobs(3, 2, 700, 1.5, 1002).features;
    (model, ds, queries)
}

fn example_selection() -> Outcome {
    let (model, ds, queries) = example_fixture();
    let config = ExampleStudyConfig::default();
    ensure(
        config.trials == 2000 && config.random_sets == 1000,
        "study defaults changed",
    )?;
    let r = example_selection_study(&model, &ds, &queries, &config, 0).map_err(e)?;
    ensure(
        r.accuracy_gain >= 0.10,
        format!("accuracy gain {:.4}", r.accuracy_gain),
    )?;
    ensure(
        r.selection.log_likelihood >= r.random_log_likelihood_q99,
        format!(
            "teacher log likelihood {} below the random q99 {}",
            r.selection.log_likelihood, r.random_log_likelihood_q99
        ),
    )?;
    Ok(format!(
        "teacher {:.4} vs random {:.4} (gain {:.4}); likelihood percentile {:.3}",
        r.teacher_accuracy, r.random_accuracy, r.accuracy_gain, r.likelihood_percentile
    ))
}

fn bias_meta_model() -> Outcome {
    let (model, ds, queries) = example_fixture();
    let point = vec![0.4, 0.2];
    let candidates: Vec<TargetInference> = (0..3)
        .map(|c| TargetInference::label_at(c, point.clone()))
        .collect();

    // no bias: the base learner, bit for bit
    let base = NearestExampleLearner {
        dataset: Arc::new(ds.clone()),
        kernel: KernelConfig::median_heuristic(&ds.features).map_err(e)?,
        k: 1,
    };
    let identity = biased_learner(
        base.clone(),
        BiasConfig {
            confirmation_strength: 0.0,
            candidates: candidates.clone(),
            prior_belief: vec![0.7, 0.2, 0.1],
        },
    )
    .map_err(e)?;
    for j in 0..200 {
        let x = random_example_set(&ds, 2, rng::derive(17, j)).map_err(e)?;
        for t in &candidates {
            let (a, b) = (
                base.log_likelihood(t, &x).map_err(e)?,
                identity.log_likelihood(t, &x).map_err(e)?,
            );
            ensure(
                a.to_bits() == b.to_bits(),
                format!("strength 0 changed {a} to {b}"),
            )?;
        }
    }

    // a strong prior swamps evidence that points the other way
    let items: Vec<Explanation> = (0..20).map(|i| Explanation::ExampleSet(vec![i])).collect();
    let table = TableLearner {
        targets: candidates.clone(),
        keys: items
            .iter()
            .map(|x| x.key().unwrap())
            .collect::<Vec<ExplanationKey>>(),
        table: vec![vec![0.5; 20], vec![0.3; 20], vec![0.2; 20]],
    };
    let strong = biased_learner(
        table,
        BiasConfig {
            confirmation_strength: 50.0,
            candidates: candidates.clone(),
            prior_belief: vec![0.2, 0.3, 0.5],
        },
    )
    .map_err(e)?;
    let mut least = 1.0f64;
    for x in &items {
        let belief = belief_over_candidates(&strong, &candidates, x).map_err(e)?;
        least = least.min(belief[2]);
    }
    ensure(
        least >= 1.0 - 1e-6,
        format!("strength 50 leaves belief {least} on the favoured label"),
    )?;

    let config = ExampleStudyConfig {
        random_sets: 200,
        ..Default::default()
    };
    let mut worst = f64::NEG_INFINITY;
    for strength in [0.5, 2.0, 10.0, 50.0] {
        for seed in 0..3 {
            let r = example_bias_study(&model, &ds, &queries, &config, strength, 3.0, seed)
                .map_err(e)?;
            for d in &r.accuracy_difference {
                worst = worst.max(*d);
            }
        }
    }
    ensure(worst <= 0.0, format!("a biased population gained {worst}"))?;
    Ok(format!("strength 0 bitwise identical; strength 50 belief >= {least:.9}; largest biased gain {worst:.4}"))
}

struct Bt<'a> {
    dir: &'a Path,
}

impl Bt<'_> {
    fn run(&self, args: &[&str]) -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_bt"))
            .current_dir(self.dir)
            .env_remove("BT_THREADS")
            .args(args)
            .output()
            .map_err(e)?;
        if !out.status.success() {
            return Err(format!(
                "bt {args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    }

    /// Output bytes of one invocation plus any file it wrote to `written`.
    fn capture(&self, args: &[&str], written: Option<&str>) -> Result<Vec<u8>, String> {
        let mut bytes = self.run(args)?;
        if let Some(f) = written {
            bytes.extend(std::fs::read(self.dir.join(f)).map_err(e)?);
        }
        Ok(bytes)
    }
}

fn reproducibility(suite_start: Instant) -> Outcome {
    let tmp = tempfile::tempdir().map_err(e)?;
    let bt = Bt { dir: tmp.path() };
    bt.run(&[
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
    ])?;
    bt.run(&[
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
    ])?;
    bt.run(&[
        "model",
        "fit",
        "--data",
        "blobs.csv",
        "--family",
        "plda",
        "--out",
        "plda.json",
    ])?;
    bt.run(&[
        "model",
        "fit",
        "--data",
        "grid.csv",
        "--family",
        "tiny-mlp",
        "--seed",
        "1",
        "--epochs",
        "50",
        "--out",
        "grid.json",
    ])?;
    std::fs::write(
        tmp.path().join("study.json"),
        r#"{"experiment": "bias", "model": {"checkpoint": "plda.json"}, "data": {"csv": "blobs.csv"},
            "queries": {"generate": {"kind": "gaussian-blobs", "classes": 3, "dim": 2, "per_class": 50, "separation": 1.5}, "seed": 7},
            "study": {"trials": 300, "random_sets": 50}, "strength": 2.0, "wrong_mass": 3.0}"#,
    )
    .map_err(e)?;
    std::fs::write(
        tmp.path().join("strategies.json"),
        r#"{"experiment": "strategy-comparison", "rival_belief": 0.5, "n": 5000, "burn_in": 500}"#,
    )
    .map_err(e)?;

    let grid = ["--model", "grid.json", "--data", "grid.csv", "--row", "25"];
    let blob = ["--model", "plda.json", "--data", "blobs.csv"];
    let cases: Vec<(Vec<&str>, Option<&str>)> = vec![
        (
            vec![
                "dataset",
                "make",
                "--kind",
                "two-moons",
                "--n",
                "80",
                "--seed",
                "4",
                "--csv",
                "moons.csv",
            ],
            Some("moons.csv"),
        ),
        (vec!["dataset", "import", "--csv", "grid.csv"], None),
        (
            vec![
                "model", "fit", "--data", "grid.csv", "--family", "tiny-mlp", "--seed", "5",
                "--epochs", "40",
            ],
            None,
        ),
        (
            vec![
                "model",
                "fit",
                "--data",
                "blobs.csv",
                "--family",
                "gaussian-generative",
            ],
            None,
        ),
        (
            vec![
                "model",
                "inspect",
                "--model",
                "grid.json",
                "--data",
                "grid.csv",
            ],
            None,
        ),
        (
            [
                &["explain", "plda-examples"][..],
                &blob,
                &[
                    "--strategy",
                    "mh",
                    "--n",
                    "3000",
                    "--burn-in",
                    "100",
                    "--seed",
                    "2",
                ],
            ]
            .concat(),
            None,
        ),
        ([&["explain", "mmd-critic"][..], &blob].concat(), None),
        (
            [
                &["explain", "rise"][..],
                &grid,
                &[
                    "--masks",
                    "2000",
                    "--seed",
                    "1",
                    "--render",
                    "pgm",
                    "--render-out",
                    "rise.pgm",
                ],
            ]
            .concat(),
            Some("rise.pgm"),
        ),
        (
            [
                &["explain", "shap"][..],
                &grid,
                &["--samples", "400", "--seed", "2"],
            ]
            .concat(),
            None,
        ),
        (
            [&["explain", "lime"][..], &grid, &["--seed", "3"]].concat(),
            None,
        ),
        (
            [
                &["explain", "tree-distill"][..],
                &blob,
                &[
                    "--seed",
                    "4",
                    "--epochs",
                    "60",
                    "--render",
                    "svg",
                    "--render-out",
                    "tree.svg",
                ],
            ]
            .concat(),
            Some("tree.svg"),
        ),
        (
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
                    "500",
                    "--burn-in",
                    "50",
                    "--seed",
                    "5",
                ],
            ]
            .concat(),
            None,
        ),
        (
            vec!["study", "run", "--config", "study.json", "--seed", "3"],
            None,
        ),
        (
            vec!["study", "run", "--config", "strategies.json", "--seed", "3"],
            None,
        ),
        (vec!["oracle", "check", "--quick", "--seed", "1"], None),
    ];
    for (args, written) in &cases {
        let first = bt.capture(&[&["--threads", "1"][..], args].concat(), *written)?;
        let again = bt.capture(&[&["--threads", "1"][..], args].concat(), *written)?;
        let wide = bt.capture(&[&["--threads", "4"][..], args].concat(), *written)?;
        let default = bt.capture(args, *written)?;
        ensure(first == again, format!("rerun of {args:?} differs"))?;
        ensure(
            first == wide && first == default,
            format!("{args:?} depends on the thread count"),
        )?;
    }
    let secs = suite_start.elapsed().as_secs_f64();
    ensure(secs < 600.0, format!("acceptance run took {secs:.0}s"))?;
    Ok(format!("{} invocations byte-identical across reruns and 1/4/default threads; acceptance run {secs:.1}s", cases.len()))
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        (
            "teacher posterior matches exhaustive normalization",
            Box::new(posterior_correctness),
        ),
        ("selection consistency", Box::new(selection_consistency)),
        ("SHAP anchor", Box::new(shap_anchor)),
        ("RISE as a teaching special case", Box::new(rise_identity)),
        ("MMD-critic", Box::new(mmd_critic)),
        ("LIME", Box::new(lime)),
        ("distillation", Box::new(distillation)),
        ("example selection value", Box::new(example_selection)),
        ("bias meta-model", Box::new(bias_meta_model)),
        ("reproducibility", Box::new(move || reproducibility(start))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:.1}s] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:.1}s] {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
