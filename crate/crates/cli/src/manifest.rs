//! Run manifests.
//!
//! Timestamps come from the clock unless `SOURCE_DATE_EPOCH` is set, in
//! which case both are that value and the manifest is reproducible too.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn now_unix() -> u64 {
    if let Some(fixed) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return fixed;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command_line: Vec<String>,
    /// SHA-256 of the resolved configuration (config file bytes for `mc`).
    pub config_sha256: String,
    /// SHA-256 of each input file, in command-line order.
    pub input_sha256: Vec<String>,
    pub master_seed: u64,
    pub library_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn start(config_sha256: String, master_seed: u64) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            command_line: std::env::args().collect(),
            config_sha256,
            input_sha256: Vec::new(),
            master_seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: now_unix(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }
}
