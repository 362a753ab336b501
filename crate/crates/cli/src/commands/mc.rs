//! `esb mc`: Monte Carlo size, power and misspecification studies.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;

use esb_core::evaluate::{
    run_misspec_sweep, run_power_study, run_size_study, Dgp, Forecaster, PowerRow, SizeRow, SweepRow,
};
use esb_core::simulate::MisspecKind;

use crate::config::StudyConfig;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, write_csv, write_json};
use crate::manifest::{sha256_hex, RunManifest};
use crate::options::ForecasterName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    /// Rejection rates of the forecaster under test (oracle by default).
    Size,
    /// Oracle against an alternative forecaster (Historical Simulation by default).
    Power,
    /// Misspecified GARCH forecasts over a design grid.
    Sweep,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(value_enum)]
    pub study: StudyKind,
    /// TOML study configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a, R: Serialize, P: Serialize> {
    schema_version: u32,
    study: StudyKind,
    config: &'a StudyConfig,
    rows: &'a [R],
    #[serde(skip_serializing_if = "Option::is_none")]
    pauc: Option<&'a [P]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dropped_days: Option<usize>,
}

#[derive(Serialize)]
struct CurveRow<'a> {
    test: &'a str,
    sample_size: usize,
    size: f64,
    power: f64,
}

#[derive(Serialize)]
struct PaucRow<'a> {
    test: &'a str,
    sample_size: usize,
    pauc: f64,
    null_excluded: usize,
    alt_excluded: usize,
}

fn forecaster(cfg: &StudyConfig, default: ForecasterName) -> Forecaster {
    match cfg.forecaster.unwrap_or(default) {
        ForecasterName::Oracle => Forecaster::Oracle,
        ForecasterName::Hs => Forecaster::HistoricalSimulation {
            window: cfg.window,
            convention: cfg.hs_convention.into(),
        },
    }
}

pub fn run(args: &McArgs) -> CliResult<()> {
    let path = args.config.display().to_string();
    let text = fs::read(&args.config)
        .with_context(|| format!("cannot read {path}"))
        .map_err(CliError::validation)?;
    let manifest = RunManifest::start(sha256_hex(&text), 0);
    let text = String::from_utf8(text)
        .with_context(|| format!("{path} is not UTF-8"))
        .map_err(CliError::validation)?;
    let cfg = StudyConfig::parse(&text)
        .with_context(|| format!("invalid config {path}"))
        .map_err(CliError::validation)?;
    let manifest = RunManifest {
        master_seed: cfg.master_seed,
        ..manifest
    };
    let mc = cfg.mc();
    mc.validate().map_err(|e| CliError::from_core(e).context(format!("invalid config {path}")))?;
    let tests = cfg
        .backtests()
        .with_context(|| format!("invalid config {path}"))
        .map_err(CliError::validation)?;
    let dgp = cfg.dgp.dgp();

    let started = Instant::now();
    let mut progress = |msg: &str| eprintln!("[{:>8.1}s] {msg}", started.elapsed().as_secs_f64());
    create_dir(&args.out)?;
    let out = |name: &str| args.out.join(name);
    let outputs: Vec<&str> = match args.study {
        StudyKind::Size => {
            let f = forecaster(&cfg, ForecasterName::Oracle);
            let study = run_size_study(&dgp, &f, &tests, &mc, &mut progress).map_err(CliError::from_core)?;
            write_csv(&out("size.csv"), &study.rows)?;
            write_json(
                &out("report.json"),
                &Report::<SizeRow, ()> {
                    schema_version: crate::SCHEMA_VERSION,
                    study: args.study,
                    config: &cfg,
                    rows: &study.rows,
                    pauc: None,
                    dropped_days: Some(study.dropped_days),
                },
            )?;
            let excluded: usize = study.outcomes.iter().map(|(_, _, o)| o.excluded).sum();
            eprintln!("excluded replications: {excluded}");
            vec!["size.csv", "report.json"]
        }
        StudyKind::Power => {
            let f = forecaster(&cfg, ForecasterName::Hs);
            let study = run_power_study(&dgp, &f, &tests, &mc, &mut progress).map_err(CliError::from_core)?;
            let curves: Vec<CurveRow> = study
                .cells
                .iter()
                .flat_map(|c| {
                    c.curve.points().iter().map(move |&(size, power)| CurveRow {
                        test: &c.test,
                        sample_size: c.sample_size,
                        size,
                        power,
                    })
                })
                .collect();
            let pauc: Vec<PaucRow> = study
                .cells
                .iter()
                .map(|c| PaucRow {
                    test: &c.test,
                    sample_size: c.sample_size,
                    pauc: c.pauc,
                    null_excluded: c.null.excluded,
                    alt_excluded: c.alt.excluded,
                })
                .collect();
            write_csv(&out("power.csv"), &study.rows)?;
            write_csv(&out("curves.csv"), &curves)?;
            write_csv(&out("pauc.csv"), &pauc)?;
            write_json(
                &out("report.json"),
                &Report::<PowerRow, PaucRow> {
                    schema_version: crate::SCHEMA_VERSION,
                    study: args.study,
                    config: &cfg,
                    rows: &study.rows,
                    pauc: Some(&pauc),
                    dropped_days: Some(study.dropped_days),
                },
            )?;
            vec!["power.csv", "curves.csv", "pauc.csv", "report.json"]
        }
        StudyKind::Sweep => {
            let design = cfg
                .design
                .ok_or_else(|| CliError::validation(anyhow!("{path}: sweep studies need `design`")))?;
            let Dgp::Garch(base) = dgp else {
                return Err(CliError::validation(anyhow!(
                    "{path}: sweeps need a GARCH data-generating process (garch-t or garch-n)"
                )));
            };
            let kind = MisspecKind::from(design);
            let grid = cfg
                .grid
                .clone()
                .unwrap_or_else(|| kind.grid(cfg.grid_points, &base, mc.tau));
            let study = run_misspec_sweep(&base, kind, &grid, &tests, &mc, &mut progress)
                .map_err(CliError::from_core)?;
            write_csv(&out("sweep.csv"), &study.rows)?;
            write_json(
                &out("report.json"),
                &Report::<SweepRow, ()> {
                    schema_version: crate::SCHEMA_VERSION,
                    study: args.study,
                    config: &cfg,
                    rows: &study.rows,
                    pauc: None,
                    dropped_days: None,
                },
            )?;
            vec!["sweep.csv", "report.json"]
        }
    };
    progress("done");
    super::finish(manifest, &args.out, &outputs)
}
