use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sfwm_core::config::ExperimentConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandLine {
    pub name: String,
    pub args: serde_json::Value,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    pub command: CommandLine,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
}

/// SHA-256 of the compact JSON form of the resolved config. Field order is
/// fixed by the struct and floats print in shortest round-trip form, so the
/// digest does not depend on platform or on the input file's formatting.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, name: &str, args: serde_json::Value, outputs: Vec<PathBuf>) -> Self {
        Self {
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            command: CommandLine {
                name: name.to_string(),
                args,
            },
            outputs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        crate::io::write_json(&path, self)?;
        Ok(path)
    }
}
