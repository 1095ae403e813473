use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    /// Skip reason or error message.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    /// Files written, relative to the run directory.
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    /// Path as written in the config.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub recording_id: String,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, InputDigest>,
    pub stages: Vec<StageRecord>,
    /// Digest of every file in the run directory except the manifest.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }

    pub fn failed(&self) -> Vec<&StageRecord> {
        self.stages.iter().filter(|s| s.status == StageStatus::Failed).collect()
    }

    pub fn succeeded(&self) -> bool {
        self.failed().is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

pub fn sha256_file(path: impl AsRef<Path>) -> std::io::Result<String> {
    let mut f = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Relative paths of all files below `root`, `/`-separated and sorted.
pub fn list_files(root: &Path) -> std::io::Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
        for entry in std::fs::read_dir(dir)? {
            let entry = entry?;
            let path = entry.path();
            if entry.file_type()?.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("below root");
                let parts: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push(parts.join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

/// Digests of every file under `root` except the manifest itself.
pub fn digest_tree(root: &Path) -> std::io::Result<BTreeMap<String, String>> {
    list_files(root)?
        .into_iter()
        .filter(|f| f != MANIFEST_FILE)
        .map(|f| {
            let digest = sha256_file(root.join(&f))?;
            Ok((f, digest))
        })
        .collect()
}

pub fn read_manifest(run_dir: &Path) -> Result<RunManifest, PipelineError> {
    let body = std::fs::read_to_string(run_dir.join(MANIFEST_FILE))?;
    serde_json::from_str(&body).map_err(|e| PipelineError::Config(format!("manifest: {e}")))
}

/// Problems found when comparing a run directory against its manifest.
pub fn verify_manifest(run_dir: &Path) -> Result<Vec<String>, PipelineError> {
    let manifest = read_manifest(run_dir)?;
    let actual = digest_tree(run_dir)?;
    let mut problems = Vec::new();
    for (f, digest) in &manifest.files {
        match actual.get(f) {
            None => problems.push(format!("{f}: listed but missing")),
            Some(d) if d != digest => problems.push(format!("{f}: digest mismatch")),
            Some(_) => {}
        }
    }
    for f in actual.keys().filter(|f| !manifest.files.contains_key(*f)) {
        problems.push(format!("{f}: present but not listed"));
    }
    Ok(problems)
}

pub(crate) fn rel(root: &Path, path: &Path) -> String {
    let rel: PathBuf = path.strip_prefix(root).map(Path::to_path_buf).unwrap_or_else(|_| path.to_path_buf());
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}
