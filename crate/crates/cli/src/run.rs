use std::path::{Path, PathBuf};

use anyhow::Context;
use cnts_core::{CntsError, NormStats, TrainMode};
use serde::{Deserialize, Serialize};

pub const CONFIG: &str = "config.json";
pub const MANIFEST: &str = "manifest.json";
pub const R_CKPT: &str = "r.ckpt";
pub const D_CKPT: &str = "d.ckpt";
pub const HISTORY: &str = "history.csv";
pub const REPORTS: &str = "reports";
pub const REPORT: &str = "reports/report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Complete,
    Failed,
}

/// Record of one training run; artifact paths are relative to the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub run_id: String,
    pub mode: TrainMode,
    pub status: RunStatus,
    #[serde(default)]
    pub error: Option<String>,
    pub config_digest: String,
    pub train_digest: String,
    pub seed: u64,
    pub norm: Option<NormStats>,
    pub artifacts: Vec<String>,
    #[serde(default)]
    pub model_digests: Vec<(String, String)>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> anyhow::Result<()> {
        write_text(&dir.join(MANIFEST), &serde_json::to_string_pretty(self)?)
    }

    pub fn load(dir: &Path) -> anyhow::Result<Self> {
        let path = dir.join(MANIFEST);
        let text = read_text(&path)?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Every listed artifact must exist on disk.
    pub fn check_artifacts(&self, dir: &Path) -> anyhow::Result<()> {
        for a in &self.artifacts {
            if !dir.join(a).is_file() {
                anyhow::bail!(CntsError::Validation(format!(
                    "run {}: listed artifact {a} is missing",
                    dir.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn version() -> String {
    format!("cnts {}", env!("CARGO_PKG_VERSION"))
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|e| CntsError::io(path, e).into())
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| CntsError::io(path, e).into())
}

pub fn create_dir(path: &Path) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(path).map_err(|e| CntsError::io(path, e))?;
    Ok(path.to_path_buf())
}

/// The error chain down to the first core error, whose message already embeds its sources.
pub fn describe(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for cause in err.chain() {
        parts.push(cause.to_string());
        if cause.is::<CntsError>() {
            break;
        }
    }
    parts.join(": ")
}
