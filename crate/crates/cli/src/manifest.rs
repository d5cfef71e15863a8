use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zndstab::evans::Method;
use zndstab::modelbench::TrendCheck;
use zndstab::znd::ProblemFile;

use crate::error::CliError;

/// Where the tolerance in effect came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TolSource {
    Flag,
    Env,
    Config,
    Default,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub operation: String,
    pub runs: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub subcommand: String,
    pub config_hash: String,
    pub config: ProblemFile,
    pub tol: f64,
    pub tol_source: TolSource,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub method: Method,
    pub jobs: Option<usize>,
    pub timestamp: String,
    pub version: String,
    pub outputs: Vec<String>,
    pub stats: Vec<StatsSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<TrendCheck>,
}

pub fn config_hash(config: &ProblemFile) -> Result<String, CliError> {
    let text = serde_json::to_string(config)?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
