//! Subcommand implementations.

pub mod backtest;
pub mod mc;
pub mod rank;
pub mod simulate;

use std::path::Path;

use crate::error::CliResult;
use crate::io::write_json;
use crate::manifest::{now_unix, RunManifest};

/// Stamps the end time and writes `manifest.json` into `out`.
pub(crate) fn finish(mut manifest: RunManifest, out: &Path, outputs: &[&str]) -> CliResult<()> {
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    manifest.finished_unix = now_unix();
    write_json(&out.join("manifest.json"), &manifest)
}
