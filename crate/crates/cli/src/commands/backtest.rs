//! `esb backtest`: run backtests on a forecast file.

use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use esb_core::backtests::{Backtest, DEFAULT_DRAWS};
use esb_core::{ProbabilityLevel, TestReport, ValidationWarning};

use crate::error::{CliError, CliResult};
use crate::io::{create_dir, read_input, write_csv, write_json};
use crate::manifest::{sha256_hex, RunManifest};
use crate::options::{parse_tests, required_columns, Mode, Side};

#[derive(Debug, Args, Serialize)]
pub struct BacktestArgs {
    /// CSV with columns `return`, `es` and optionally `date`, `var`, `sigma`.
    #[arg(long)]
    pub input: PathBuf,
    /// Probability level of the forecasts.
    #[arg(long, default_value_t = 0.025)]
    pub tau: f64,
    /// Comma-separated tests: esr-bivariate, esr-intercept, er, er-std,
    /// cc-simple, cc-general (ESR names accept a `-boot` suffix).
    #[arg(long, value_delimiter = ',', default_value = "esr-bivariate,esr-intercept")]
    pub tests: Vec<String>,
    #[arg(long, value_enum, default_value_t = Side::TwoSided)]
    pub side: Side,
    /// Inference for the ESR tests.
    #[arg(long, value_enum, default_value_t = Mode::Asymptotic)]
    pub mode: Mode,
    /// Bootstrap draws (ESR bootstrap and ER tests).
    #[arg(long, default_value_t = DEFAULT_DRAWS)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report.json, report.csv and manifest.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct TestFailure {
    test: String,
    error: String,
}

#[derive(Debug, Serialize)]
struct Report {
    schema_version: u32,
    input: String,
    n_obs: usize,
    tau: f64,
    seed: u64,
    warnings: Vec<ValidationWarning>,
    results: Vec<TestReport>,
    errors: Vec<TestFailure>,
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    test: &'a str,
    side: &'static str,
    statistic: Option<f64>,
    p_value: Option<f64>,
    n_bootstrap: Option<usize>,
    error: Option<&'a str>,
}

fn check_columns(tests: &[Backtest], table: &crate::io::InputTable, path: &str) -> CliResult<()> {
    for test in tests {
        for &col in required_columns(test) {
            let present = match col {
                "var" => table.forecasts.var.is_some(),
                _ => table.forecasts.sigma.is_some(),
            };
            if !present {
                return Err(CliError::validation(anyhow!(
                    "{path}: test `{}` needs column `{col}`, which is missing",
                    test.name()
                )));
            }
        }
    }
    Ok(())
}

pub fn run(args: &BacktestArgs) -> CliResult<()> {
    let tau = ProbabilityLevel::new(args.tau).map_err(CliError::from_core)?;
    let tests = parse_tests(&args.tests, args.mode, args.bootstrap, args.side).map_err(CliError::validation)?;
    let config = serde_json::to_vec(&(tau, &tests, args.seed)).map_err(CliError::other)?;
    let mut manifest = RunManifest::start(sha256_hex(&config), args.seed);

    let table = read_input(&args.input)?;
    let input = args.input.display().to_string();
    check_columns(&tests, &table, &input)?;
    manifest.input_sha256.push(table.sha256.clone());
    for w in &table.warnings {
        let ValidationWarning::VarBelowEs { count, first_index } = w;
        eprintln!(
            "warning: {count} VaR forecasts lie below the ES forecast (first at date {})",
            table.dates[*first_index]
        );
    }

    let y = table.returns.as_slice();
    let mut results = Vec::new();
    let mut errors = Vec::new();
    let mut rows = Vec::new();
    for test in &tests {
        match test.run(y, &table.forecasts, tau, args.seed) {
            Ok(r) => results.push(r),
            Err(e) => errors.push((test, e)),
        }
    }
    for r in &results {
        println!("{:<20} statistic {:>12.6}  p-value {:.4}", r.test_name, r.statistic, r.p_value);
        rows.push(CsvRow {
            test: &r.test_name,
            side: r.side.label(),
            statistic: Some(r.statistic),
            p_value: Some(r.p_value),
            n_bootstrap: r.n_bootstrap,
            error: None,
        });
    }
    let failures: Vec<TestFailure> = errors
        .iter()
        .map(|(t, e)| TestFailure {
            test: t.name(),
            error: e.to_string(),
        })
        .collect();
    for ((t, _), f) in errors.iter().zip(&failures) {
        eprintln!("error: {}: {}", f.test, f.error);
        rows.push(CsvRow {
            test: &f.test,
            side: t.side().label(),
            statistic: None,
            p_value: None,
            n_bootstrap: None,
            error: Some(&f.error),
        });
    }

    create_dir(&args.out)?;
    write_csv(&args.out.join("report.csv"), &rows)?;
    drop(rows);
    let report = Report {
        schema_version: crate::SCHEMA_VERSION,
        input,
        n_obs: y.len(),
        tau: tau.value(),
        seed: args.seed,
        warnings: table.warnings.clone(),
        results,
        errors: failures,
    };
    write_json(&args.out.join("report.json"), &report)?;
    super::finish(manifest, &args.out, &["report.json", "report.csv"])?;

    match errors.into_iter().next() {
        None => Ok(()),
        Some((t, e)) => Err(CliError::test(anyhow!("test `{}` failed: {e}", t.name()))),
    }
}
