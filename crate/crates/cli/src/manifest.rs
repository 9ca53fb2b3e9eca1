//! Run manifests: what went in, what came out, and how far the run got.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunCounts {
    pub policies: usize,
    pub segments: usize,
    /// Prompts answered from the response cache.
    pub cached: usize,
    /// Prompts whose request failed.
    pub failed: usize,
    pub unparsable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub taxonomy: String,
    pub backend_profile: String,
    pub model_id: String,
    pub policy: Option<String>,
    pub template_version: String,
    /// Input file name → SHA-256 of its bytes.
    pub input_hashes: BTreeMap<String, String>,
    /// Settings that shape the outputs, serialized for hashing and audit.
    pub settings: serde_json::Value,
    pub started_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
    pub status: String,
    pub stages_completed: Vec<String>,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub counts: RunCounts,
    /// Artifact name → path.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(command: &str, taxonomy: &str, backend_profile: &str, model_id: &str, template_version: &str) -> Self {
        RunManifest {
            run_id: String::new(),
            command: command.into(),
            taxonomy: taxonomy.into(),
            backend_profile: backend_profile.into(),
            model_id: model_id.into(),
            policy: None,
            template_version: template_version.into(),
            input_hashes: BTreeMap::new(),
            settings: serde_json::Value::Null,
            started_at: Utc::now(),
            finished_at: None,
            status: "running".into(),
            stages_completed: Vec::new(),
            failed_stage: None,
            error: None,
            counts: RunCounts::default(),
            outputs: BTreeMap::new(),
        }
    }

    /// Derives the run id from everything that determines the outputs.
    pub fn seal_inputs(&mut self) {
        let identity = serde_json::json!({
            "command": self.command,
            "taxonomy": self.taxonomy,
            "backend_profile": self.backend_profile,
            "model_id": self.model_id,
            "policy": self.policy,
            "template_version": self.template_version,
            "input_hashes": self.input_hashes,
            "settings": self.settings,
        });
        self.run_id = sha256_hex(identity.to_string().as_bytes())[..16].to_string();
    }

    pub fn stage_done(&mut self, stage: &str) {
        self.stages_completed.push(stage.into());
    }

    pub fn finish_ok(&mut self) {
        self.status = "ok".into();
        self.finished_at = Some(Utc::now());
    }

    pub fn finish_failed(&mut self, stage: &str, error: &anyhow::Error) {
        self.status = "failed".into();
        self.failed_stage = Some(stage.into());
        self.error = Some(format!("{error:#}"));
        self.finished_at = Some(Utc::now());
    }

    /// Writes to a temporary sibling and renames, so readers never see a
    /// partial manifest.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
        let body = serde_json::to_string_pretty(self)?;
        tmp.write_all(body.as_bytes())?;
        tmp.write_all(b"\n")?;
        tmp.persist(path)
            .map_err(|e| e.error)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_ignores_timestamps_and_counts() {
        let mut a = RunManifest::new("run", "opp-115", "mock", "m", "v1");
        a.input_hashes.insert("a.html".into(), sha256_hex(b"x"));
        a.seal_inputs();
        let mut b = a.clone();
        b.started_at = Utc::now();
        b.counts.cached = 9;
        b.seal_inputs();
        assert_eq!(a.run_id, b.run_id);
        b.input_hashes.insert("b.html".into(), sha256_hex(b"y"));
        b.seal_inputs();
        assert_ne!(a.run_id, b.run_id);
    }

    #[test]
    fn atomic_write_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let mut m = RunManifest::new("classify", "ppgdpr", "mock", "m", "v1");
        m.finish_ok();
        m.write_atomic(&path).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
