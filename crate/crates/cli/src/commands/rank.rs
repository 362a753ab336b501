//! `esb rank`: order competing forecast files by mean FZ0 loss.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::Args;
use serde::Serialize;

use esb_core::{rank_by_fz0_loss, LabelledForecasts, ProbabilityLevel, RankedModel};

use crate::error::{CliError, CliResult};
use crate::io::{create_dir, read_input, write_csv, write_json};
use crate::manifest::{sha256_hex, RunManifest};

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Forecast file as `LABEL=PATH` or `PATH` (label = file stem); repeat
    /// for every model. Files need `return`, `var` and `es` columns with
    /// identical returns.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 0.025)]
    pub tau: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Row<'a> {
    rank: usize,
    label: &'a str,
    mean_loss: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    tau: f64,
    n_obs: usize,
    ranking: &'a [RankedModel],
}

fn split_label(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let label = Path::new(spec)
                .file_stem()
                .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (label, path)
        }
    }
}

pub fn run(args: &RankArgs) -> CliResult<()> {
    let tau = ProbabilityLevel::new(args.tau).map_err(CliError::from_core)?;
    let config = serde_json::to_vec(&(tau, &args.models)).map_err(CliError::other)?;
    let mut manifest = RunManifest::start(sha256_hex(&config), 0);

    let mut returns: Option<Vec<f64>> = None;
    let mut models = Vec::new();
    for spec in &args.models {
        let (label, path) = split_label(spec);
        let table = read_input(&path)?;
        if table.forecasts.var.is_none() {
            return Err(CliError::validation(anyhow!(
                "{}: ranking needs column `var`, which is missing",
                path.display()
            )));
        }
        manifest.input_sha256.push(table.sha256.clone());
        match &returns {
            None => returns = Some(table.returns.as_slice().to_vec()),
            Some(r) if r.as_slice() != table.returns.as_slice() => {
                return Err(CliError::validation(anyhow!(
                    "{}: returns differ from those of the first model",
                    path.display()
                )))
            }
            Some(_) => {}
        }
        models.push(LabelledForecasts::new(label, table.forecasts));
    }
    let y = returns.expect("at least one model");
    let ranking = rank_by_fz0_loss(&y, &models, tau).map_err(CliError::from_core)?;
    let rows: Vec<Row> = ranking
        .iter()
        .enumerate()
        .map(|(i, m)| Row {
            rank: i + 1,
            label: &m.label,
            mean_loss: m.mean_loss,
        })
        .collect();
    for r in &rows {
        println!("{:>3}  {:<24} {:.8}", r.rank, r.label, r.mean_loss);
    }
    create_dir(&args.out)?;
    write_csv(&args.out.join("ranking.csv"), &rows)?;
    write_json(
        &args.out.join("report.json"),
        &Report {
            schema_version: crate::SCHEMA_VERSION,
            tau: tau.value(),
            n_obs: y.len(),
            ranking: &ranking,
        },
    )?;
    super::finish(manifest, &args.out, &["ranking.csv", "report.json"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_from_spec_or_stem() {
        assert_eq!(split_label("hs=/tmp/a.csv"), ("hs".into(), PathBuf::from("/tmp/a.csv")));
        assert_eq!(split_label("/tmp/garch.csv"), ("garch".into(), PathBuf::from("/tmp/garch.csv")));
    }
}
