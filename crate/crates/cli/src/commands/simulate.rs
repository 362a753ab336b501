//! `esb simulate`: simulate a return path and its forecasts.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use esb_core::evaluate::Forecaster;
use esb_core::ProbabilityLevel;

use crate::error::{CliError, CliResult};
use crate::io::{create_dir, write_csv};
use crate::manifest::{sha256_hex, RunManifest};
use crate::options::{Convention, DgpName, ForecasterName};

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = DgpName::GarchT)]
    pub dgp: DgpName,
    /// Number of forecast days.
    #[arg(long = "T", visible_alias = "days")]
    pub days: usize,
    /// Simulated days discarded before the output starts.
    #[arg(long, default_value_t = 1000)]
    pub burnin: usize,
    /// Days written before the first forecast day (history for `hs`).
    #[arg(long, default_value_t = 0)]
    pub presample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ForecasterName::Oracle)]
    pub forecaster: ForecasterName,
    /// Historical Simulation window.
    #[arg(long, default_value_t = 250)]
    pub w: usize,
    #[arg(long, value_enum, default_value_t = Convention::PastForecasts)]
    pub hs_convention: Convention,
    #[arg(long, default_value_t = 0.025)]
    pub tau: f64,
    /// Output directory for paths.csv, forecasts.csv and manifest.json.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct PathRow {
    date: usize,
    #[serde(rename = "return")]
    ret: f64,
    sigma: f64,
    z: f64,
}

#[derive(Serialize)]
struct ForecastRow {
    date: usize,
    #[serde(rename = "return")]
    ret: f64,
    es: f64,
    var: f64,
    sigma: f64,
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let tau = ProbabilityLevel::new(args.tau).map_err(CliError::from_core)?;
    let config = serde_json::to_vec(&(args.dgp, args.days, args.burnin, args.presample, args.forecaster, args.w, args.hs_convention, tau))
        .map_err(CliError::other)?;
    let manifest = RunManifest::start(sha256_hex(&config), args.seed);

    let dgp = args.dgp.dgp();
    let forecaster = match args.forecaster {
        ForecasterName::Oracle => Forecaster::Oracle,
        ForecasterName::Hs => Forecaster::HistoricalSimulation {
            window: args.w,
            convention: args.hs_convention.into(),
        },
    };
    let path = dgp
        .path(args.presample + args.days, args.burnin, args.seed)
        .map_err(CliError::from_core)?;
    let sample = forecaster
        .forecast(&path, args.presample, dgp.law(), tau)
        .map_err(CliError::from_core)?;
    if sample.dropped > 0 {
        eprintln!("warning: {} forecast days dropped (empty tail window)", sample.dropped);
    }

    let paths: Vec<PathRow> = (0..path.len())
        .map(|t| PathRow {
            date: t,
            ret: path.returns[t],
            sigma: path.sigma[t],
            z: path.z[t],
        })
        .collect();
    let fc = &sample.forecasts;
    let var = fc.var.as_deref().unwrap_or_default();
    let sigma = fc.sigma.as_deref().unwrap_or_default();
    let forecasts: Vec<ForecastRow> = sample
        .days
        .iter()
        .enumerate()
        .map(|(i, &d)| ForecastRow {
            date: d,
            ret: sample.returns[i],
            es: fc.es[i],
            var: var[i],
            sigma: sigma[i],
        })
        .collect();

    create_dir(&args.out)?;
    write_csv(&args.out.join("paths.csv"), &paths)?;
    write_csv(&args.out.join("forecasts.csv"), &forecasts)?;
    super::finish(manifest, &args.out, &["paths.csv", "forecasts.csv"])
}

