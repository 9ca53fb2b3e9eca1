//! Append-only response cache.
//!
//! One JSON record per line; the key is a SHA-256 over model id, temperature
//! and prompt text. Later records for the same key never replace earlier ones.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const CACHE_FILE_NAME: &str = "responses.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub model_id: String,
    pub prompt_hash: String,
    pub response_text: String,
    pub timestamp: DateTime<Utc>,
}

pub fn cache_key(model_id: &str, temperature: f64, prompt_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_id.as_bytes());
    hasher.update([0]);
    hasher.update(format!("{temperature:?}").as_bytes());
    hasher.update([0]);
    hasher.update(prompt_text.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CacheRecord>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Opens (creating if needed) `dir/responses.jsonl`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(CACHE_FILE_NAME);
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheRecord>(&line) {
                    Ok(record) => {
                        entries.entry(record.prompt_hash.clone()).or_insert(record);
                    }
                    Err(e) => log::warn!("{}:{}: skipping unreadable cache record: {e}", path.display(), i + 1),
                }
            }
        }
        let mut writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        let existing = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if existing.last().is_some_and(|&b| b != b'\n') {
            writer.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(ResponseCache {
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(writer)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.read().unwrap().contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `record` unless its key is already present; returns the record
    /// that is now authoritative for the key.
    pub fn insert(&self, record: CacheRecord) -> Result<CacheRecord> {
        let mut writer = self.writer.lock().unwrap();
        if let Some(existing) = self.get(&record.prompt_hash) {
            return Ok(existing);
        }
        if let (Some(file), Some(path)) = (writer.as_mut(), self.path.as_ref()) {
            let mut line = serde_json::to_string(&record)?;
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
            file.flush().map_err(|e| Error::io(path, e))?;
        }
        self.entries
            .write()
            .unwrap()
            .insert(record.prompt_hash.clone(), record.clone());
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(key: &str, text: &str) -> CacheRecord {
        CacheRecord {
            model_id: "m".into(),
            prompt_hash: key.into(),
            response_text: text.into(),
            timestamp: "2024-01-01T00:00:00Z".parse().unwrap(),
        }
    }

    #[test]
    fn key_depends_on_every_input() {
        let base = cache_key("gpt-4-0314", 0.0, "prompt");
        assert_eq!(base, cache_key("gpt-4-0314", 0.0, "prompt"));
        assert_ne!(base, cache_key("gpt-4-0613", 0.0, "prompt"));
        assert_ne!(base, cache_key("gpt-4-0314", 0.5, "prompt"));
        assert_ne!(base, cache_key("gpt-4-0314", 0.0, "prompt "));
        assert_eq!(base.len(), 64);
    }

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        {
            let cache = ResponseCache::open(dir.path()).unwrap();
            cache.insert(record("k1", "Data Retention")).unwrap();
            cache.insert(record("k2", "Other")).unwrap();
            // first write wins
            cache.insert(record("k1", "changed")).unwrap();
        }
        let cache = ResponseCache::open(dir.path()).unwrap();
        assert_eq!(cache.len(), 2);
        assert_eq!(cache.get("k1").unwrap().response_text, "Data Retention");
        let text = std::fs::read_to_string(dir.path().join(CACHE_FILE_NAME)).unwrap();
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn truncated_tail_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let line = serde_json::to_string(&record("k1", "x")).unwrap();
        std::fs::write(dir.path().join(CACHE_FILE_NAME), format!("{line}\n{{\"model_id\":")).unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        assert_eq!(cache.len(), 1);
    }
}
