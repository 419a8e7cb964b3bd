use bt_core::checks::{run_suite, CheckResult, Suite, SuiteSize};
use serde::Serialize;

use crate::args::OracleCommand;
use crate::error::{CliError, CliResult};
use crate::io::Sink;

#[derive(Debug, Serialize)]
struct OracleReport {
    suite: Suite,
    seed: u64,
    quick: bool,
    checks: Vec<CheckResult>,
    passed: bool,
}

fn quick_size() -> SuiteSize {
    SuiteSize {
        posterior_cases: 40,
        selection_cases: 40,
        mcmc_cases: 2,
        mcmc_draws: 100_000,
        shap_max_dim: 6,
        mmd_cases: 20,
        plda_cases: 20,
    }
}

pub fn run(cmd: OracleCommand, sink: &Sink) -> CliResult<()> {
    let OracleCommand::Check(a) = cmd;
    let suite: Suite = a
        .suite
        .parse()
        .map_err(|e: bt_core::Error| CliError::usage(e.to_string()))?;
    let size = if a.quick {
        quick_size()
    } else {
        SuiteSize::default()
    };
    let checks = run_suite(suite, &size, a.seed)?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    let report = OracleReport {
        suite,
        seed: a.seed,
        quick: a.quick,
        passed: failed.is_empty(),
        checks,
    };
    sink.emit_json(&report)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed {
            kind: "OracleDisagreement",
            message: format!("checks disagree with their oracles: {}", failed.join(", ")),
        })
    }
}
