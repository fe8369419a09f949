//! `manifest.json`: what a run read, wrote, how long each stage took and
//! what it warned about.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// A file with its content digest. Output paths are relative to the output
/// directory and use `/` separators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn of(path: &Path, name: String) -> Result<Self> {
        let data = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: name,
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    /// Disabled by the configuration; wrote nothing.
    Skipped,
    /// Aborted; the listed outputs are partial.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub outputs: Vec<FileEntry>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Every stage finished or was skipped.
    Complete,
    /// Some stages have not run yet.
    Partial,
    /// A stage failed; its outputs are incomplete.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_digest: String,
    pub config: RunConfig,
    pub inputs: Vec<FileEntry>,
    pub stages: Vec<StageRecord>,
    pub status: RunStatus,
}

impl RunManifest {
    pub fn new(config: &RunConfig, config_digest: &str, inputs: Vec<FileEntry>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest: config_digest.to_string(),
            config: config.clone(),
            inputs,
            stages: Vec::new(),
            status: RunStatus::Partial,
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_FILE)
    }

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = Self::path(dir);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = Self::path(dir);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Replaces the record of the same stage, keeping pipeline order.
    pub fn upsert(&mut self, record: StageRecord, order: &[&str]) {
        self.stages.retain(|s| s.stage != record.stage);
        self.stages.push(record);
        let rank = |s: &StageRecord| order.iter().position(|o| *o == s.stage).unwrap_or(usize::MAX);
        self.stages.sort_by_key(rank);
        self.status = if self.stages.iter().any(|s| s.status == StageStatus::Failed) {
            RunStatus::Failed
        } else if order.iter().all(|o| self.stage(o).is_some()) {
            RunStatus::Complete
        } else {
            RunStatus::Partial
        };
    }

    /// Every output path of every stage.
    pub fn files(&self) -> BTreeSet<String> {
        self.stages
            .iter()
            .flat_map(|s| s.outputs.iter().map(|f| f.path.clone()))
            .collect()
    }
}

/// All regular files below `dir` except the manifest, as relative paths.
pub fn scan_outputs(dir: &Path) -> Result<BTreeSet<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeSet<String>) -> Result<()> {
        for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
            let entry = entry.map_err(|e| CliError::io(dir, e))?;
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = relative_name(root, &path);
                if rel != MANIFEST_FILE {
                    out.insert(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = BTreeSet::new();
    if dir.exists() {
        walk(dir, dir, &mut out)?;
    }
    Ok(out)
}

pub fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(stage: &str, status: StageStatus, files: &[&str]) -> StageRecord {
        StageRecord {
            stage: stage.into(),
            status,
            seconds: 0.0,
            outputs: files
                .iter()
                .map(|f| FileEntry {
                    path: f.to_string(),
                    sha256: String::new(),
                    bytes: 0,
                })
                .collect(),
            warnings: vec![],
            error: None,
        }
    }

    fn config() -> RunConfig {
        crate::config::parse_config("seed = 1\n[paths]\nprices='p'\nsectors='s'\noutput='o'\n", &[]).unwrap()
    }

    #[test]
    fn status_and_order() {
        let order = ["a", "b"];
        let mut m = RunManifest::new(&config(), "d", vec![]);
        m.upsert(record("b", StageStatus::Ok, &["x/y.csv"]), &order);
        assert_eq!(m.status, RunStatus::Partial);
        m.upsert(record("a", StageStatus::Skipped, &[]), &order);
        assert_eq!(m.status, RunStatus::Complete);
        assert_eq!(m.stages[0].stage, "a");
        m.upsert(record("b", StageStatus::Failed, &["z"]), &order);
        assert_eq!(m.status, RunStatus::Failed);
        assert_eq!(m.files().into_iter().collect::<Vec<_>>(), vec!["z"]);
    }

    #[test]
    fn save_load_and_scan() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::new(&config(), "d", vec![]);
        m.save(dir.path()).unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap().unwrap(), m);
        std::fs::create_dir_all(dir.path().join("k")).unwrap();
        std::fs::write(dir.path().join("k/f.csv"), "1").unwrap();
        let files = scan_outputs(dir.path()).unwrap();
        assert_eq!(files.into_iter().collect::<Vec<_>>(), vec!["k/f.csv"]);
        let e = FileEntry::of(&dir.path().join("k/f.csv"), "k/f.csv".into()).unwrap();
        assert_eq!(e.sha256, "6b86b273ff34fce19d6b804eff5a3f5747ada4eaa22f1d49c01e52ddb7875b4b");
    }
}
