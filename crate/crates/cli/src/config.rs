//! TOML configuration file.
//!
//! ```toml
//! cache_dir = "cache"
//! offline = true
//!
//! [profiles.gpt4-june]
//! provider = "openai"
//! base_url = "https://api.openai.com/v1"
//! model_id = "gpt-4-0613"
//! requests_per_minute = 20
//! ```
//!
//! A profile named like a built-in one overrides only the keys it sets; any
//! other name starts from the mock defaults. API keys are never read from this
//! file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use policybench_core::backends::BUILTIN_PROFILES;
use policybench_core::BackendConfig;

pub const DEFAULT_CACHE_DIR: &str = ".policybench-cache";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub cache_dir: Option<PathBuf>,
    #[serde(default)]
    pub offline: bool,
    #[serde(default)]
    pub profiles: BTreeMap<String, toml::Table>,
}

/// Keys a profile table may set (`backend_id` is always the profile name).
const PROFILE_KEYS: [&str; 10] = [
    "provider",
    "base_url",
    "model_id",
    "temperature",
    "max_in_flight",
    "requests_per_minute",
    "max_retries",
    "timeout_secs",
    "backoff_ms",
    "auth",
];

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Config =
            toml::from_str(&text).map_err(|e| policybench_core::Error::Config(format!("{}: {e}", path.display())))?;
        // relative cache paths are relative to the config file
        if let (Some(dir), Some(parent)) = (&config.cache_dir, path.parent()) {
            if dir.is_relative() {
                config.cache_dir = Some(parent.join(dir));
            }
        }
        for name in config.profiles.keys() {
            config.profile(name).with_context(|| format!("in {}", path.display()))?;
        }
        Ok(config)
    }

    pub fn profile(&self, name: &str) -> Result<BackendConfig> {
        let builtin = BackendConfig::profile(name);
        let Some(overrides) = self.profiles.get(name) else {
            return match builtin {
                Some(mut p) => {
                    p.backend_id = name.to_string();
                    Ok(p)
                }
                None => {
                    let mut known: Vec<&str> = BUILTIN_PROFILES.to_vec();
                    known.extend(self.profiles.keys().map(String::as_str));
                    bail!(policybench_core::Error::Config(format!(
                        "unknown backend profile `{name}` (known: {})",
                        known.join(", ")
                    )))
                }
            };
        };
        let invalid = |reason: String| policybench_core::Error::Config(format!("profile `{name}`: {reason}"));
        let base = builtin.unwrap_or_default();
        let mut table = toml::Table::try_from(&base).map_err(|e| invalid(e.to_string()))?;
        for (key, value) in overrides {
            if !PROFILE_KEYS.contains(&key.as_str()) {
                bail!(invalid(format!("unknown key `{key}` (keys: {})", PROFILE_KEYS.join(", "))));
            }
            table.insert(key.clone(), value.clone());
        }
        let mut profile: BackendConfig = toml::Value::Table(table).try_into().map_err(|e| invalid(e.to_string()))?;
        profile.backend_id = name.to_string();
        profile.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(profile)
    }
}
