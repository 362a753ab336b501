//! CSV ingestion and JSON/CSV emission.
//!
//! Input files need a header row with `return` and `es` columns; `date`,
//! `var` and `sigma` are optional. Column order is free.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;

use esb_core::{validate_pair, ForecastSet, ReturnSeries, ValidationWarning};

use crate::error::{CliError, CliResult};

/// A parsed and validated input file.
#[derive(Debug, Clone)]
pub struct InputTable {
    pub dates: Vec<String>,
    pub returns: ReturnSeries,
    pub forecasts: ForecastSet,
    pub warnings: Vec<ValidationWarning>,
    pub sha256: String,
}

struct Columns {
    date: Option<usize>,
    ret: usize,
    es: usize,
    var: Option<usize>,
    sigma: Option<usize>,
}

fn locate(headers: &csv::StringRecord, path: &Path) -> CliResult<Columns> {
    let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
    let required = |name: &str| {
        find(name).ok_or_else(|| {
            CliError::validation(anyhow!(
                "{}: missing required column `{name}` (found: {})",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })
    };
    Ok(Columns {
        date: find("date"),
        ret: required("return")?,
        es: required("es")?,
        var: find("var"),
        sigma: find("sigma"),
    })
}

/// Reads and validates a forecast file.
pub fn read_input(path: &Path) -> CliResult<InputTable> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::validation)?;
    let sha256 = crate::manifest::sha256_hex(&bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .with_context(|| format!("{}: cannot read the header row", path.display()))
        .map_err(CliError::validation)?
        .clone();
    let cols = locate(&headers, path)?;

    let mut dates = Vec::new();
    let mut returns = Vec::new();
    let mut es = Vec::new();
    let mut var = cols.var.map(|_| Vec::new());
    let mut sigma = cols.sigma.map(|_| Vec::new());
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record
            .with_context(|| format!("{}: malformed CSV", path.display()))
            .map_err(CliError::validation)?;
        let line = record.position().map_or(0, |p| p.line());
        let number = |idx: usize, name: &str| -> CliResult<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                CliError::validation(anyhow!(
                    "{} line {line}: column `{name}`: cannot parse {raw:?} as a number",
                    path.display()
                ))
            })
        };
        dates.push(match cols.date {
            Some(i) => record.get(i).unwrap_or("").to_string(),
            None => dates.len().to_string(),
        });
        returns.push(number(cols.ret, "return")?);
        es.push(number(cols.es, "es")?);
        if let (Some(i), Some(v)) = (cols.var, var.as_mut()) {
            v.push(number(i, "var")?);
        }
        if let (Some(i), Some(s)) = (cols.sigma, sigma.as_mut()) {
            s.push(number(i, "sigma")?);
        }
        lines.push(line);
    }

    let at_line = |e: esb_core::Error| {
        let row = match &e {
            esb_core::Error::NonFinite { index, .. }
            | esb_core::Error::NonNegativeEsForecast { index, .. }
            | esb_core::Error::NonPositiveSigma { index, .. } => Some(*index),
            _ => None,
        };
        let err = CliError::from_core(e);
        match row.and_then(|r| lines.get(r)) {
            Some(line) => err.context(format!("{} line {line}", path.display())),
            None => err.context(path.display().to_string()),
        }
    };
    let returns = ReturnSeries::new(returns).map_err(at_line)?;
    let forecasts = ForecastSet { es, var, sigma };
    let warnings = validate_pair(&returns, &forecasts).map_err(at_line)?.warnings;
    Ok(InputTable {
        dates,
        returns,
        forecasts,
        warnings,
        sha256,
    })
}

/// Writes `rows` as CSV with a header derived from their fields.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(CliError::other)?;
    for r in rows {
        w.serialize(r)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(CliError::other)?;
    }
    w.flush()
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::other)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(CliError::other)?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::other)
}

pub fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(CliError::other)
}
