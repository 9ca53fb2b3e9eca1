//! Chat-completion backends, response caching, retries, rate limiting and
//! order-preserving batch classification.

pub mod cache;
pub mod http;
pub mod mock;
pub mod parse;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PredictedLabel, Prediction, Taxonomy};
use crate::error::{Error, Result};
use crate::prompting::PromptBundle;

pub use cache::{cache_key, CacheRecord, ResponseCache};
pub use http::{HttpBackend, HttpResponse, ReqwestTransport, Transport};
pub use mock::{MockBackend, MOCK_MODEL_ID};
pub use parse::parse_label;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BackendError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("rate limit still exceeded after {attempts} attempts")]
    RateLimitExhausted { attempts: u32 },
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("transient failure: {0}")]
    Transient(String),
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed provider payload: {0}")]
    MalformedPayload(String),
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("offline mode forbids calling live backend `{0}`")]
    Offline(String),
}

impl BackendError {
    /// False for local problems (configuration, offline mode) that never
    /// reached a provider.
    pub fn is_provider_failure(&self) -> bool {
        !matches!(self, BackendError::Config(_) | BackendError::Offline(_))
    }

    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            BackendError::RateLimited(_) | BackendError::Timeout(_) | BackendError::Transient(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provider {
    Mock,
    OpenAi,
    Anthropic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuthScheme {
    Bearer,
    XApiKey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub backend_id: String,
    pub provider: Provider,
    pub base_url: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_in_flight: usize,
    pub requests_per_minute: u32,
    pub max_retries: u32,
    pub timeout_secs: f64,
    /// First retry delay; doubles on every further attempt.
    pub backoff_ms: u64,
    /// Overrides the provider's usual auth header.
    pub auth: Option<AuthScheme>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            backend_id: "mock".into(),
            provider: Provider::Mock,
            base_url: String::new(),
            model_id: MOCK_MODEL_ID.into(),
            temperature: 0.0,
            max_in_flight: 4,
            requests_per_minute: 600_000,
            max_retries: 3,
            timeout_secs: 60.0,
            backoff_ms: 1_000,
            auth: None,
        }
    }
}

pub const BUILTIN_PROFILES: [&str; 4] = ["mock", "chatgpt", "gpt4", "claude2"];

impl BackendConfig {
    /// Built-in profiles: `mock`, `chatgpt`, `gpt4`, `claude2`.
    pub fn profile(name: &str) -> Option<Self> {
        let live = |provider, base_url: &str, model_id: &str| BackendConfig {
            backend_id: name.to_string(),
            provider,
            base_url: base_url.to_string(),
            model_id: model_id.to_string(),
            max_in_flight: 4,
            requests_per_minute: 60,
            max_retries: 5,
            ..BackendConfig::default()
        };
        match name {
            "mock" => Some(BackendConfig::default()),
            "chatgpt" => Some(live(Provider::OpenAi, "https://api.openai.com/v1", "gpt-3.5-turbo-0613")),
            "gpt4" => Some(live(Provider::OpenAi, "https://api.openai.com/v1", "gpt-4-0314")),
            "claude2" => Some(live(Provider::Anthropic, "https://api.anthropic.com/v1", "claude-2")),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(BackendError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_in_flight == 0 {
            return Err(BackendError::Config("max_in_flight must be >= 1".into()));
        }
        if self.requests_per_minute == 0 {
            return Err(BackendError::Config("requests_per_minute must be >= 1".into()));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(BackendError::Config("timeout_secs must be > 0".into()));
        }
        if self.model_id.is_empty() {
            return Err(BackendError::Config("model_id is empty".into()));
        }
        if self.provider != Provider::Mock && self.base_url.is_empty() {
            return Err(BackendError::Config(format!(
                "profile `{}` has no base_url",
                self.backend_id
            )));
        }
        Ok(())
    }

    pub fn is_live(&self) -> bool {
        self.provider != Provider::Mock
    }

    pub fn auth_scheme(&self) -> AuthScheme {
        self.auth.unwrap_or(match self.provider {
            Provider::Anthropic => AuthScheme::XApiKey,
            _ => AuthScheme::Bearer,
        })
    }

    /// Environment variable holding the credential, e.g. `POLICYBENCH_GPT4_KEY`.
    pub fn api_key_env(&self) -> String {
        let profile: String = self
            .backend_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
            .collect();
        format!("POLICYBENCH_{profile}_KEY")
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompletionRequest<'a> {
    pub model_id: &'a str,
    pub temperature: f64,
    pub prompt: &'a str,
}

pub trait Backend: Send + Sync {
    /// Whether calls leave the machine.
    fn is_live(&self) -> bool;
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError>;
}

/// Builds the backend named by `config`. Credentials come from the
/// environment; in offline mode a missing key is tolerated because live calls
/// are refused anyway.
pub fn connect(config: &BackendConfig, offline: bool) -> Result<Arc<dyn Backend>, BackendError> {
    config.validate()?;
    match config.provider {
        Provider::Mock => Ok(Arc::new(MockBackend::new())),
        Provider::OpenAi | Provider::Anthropic => {
            let var = config.api_key_env();
            let key = match std::env::var(&var) {
                Ok(key) if !key.is_empty() => key,
                _ if offline => String::new(),
                _ => {
                    return Err(BackendError::Config(format!(
                        "credential for profile `{}` missing: set {var}",
                        config.backend_id
                    )))
                }
            };
            let transport = Arc::new(ReqwestTransport::new(config.timeout())?);
            Ok(Arc::new(HttpBackend::new(config, key, transport)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawResponse {
    pub text: String,
    pub latency: Duration,
    pub from_cache: bool,
    /// When the provider produced the text (the original time for cache hits).
    pub timestamp: DateTime<Utc>,
}

/// Spaces request starts at least `60 / requests_per_minute` seconds apart.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(requests: u32) -> Self {
        RateLimiter {
            interval: Duration::from_secs(60) / requests.max(1),
            next_slot: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next_slot.lock().unwrap();
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug)]
pub struct BatchFailure {
    pub segment_id: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct BatchResult {
    /// One per prompt, in prompt order.
    pub predictions: Vec<Prediction>,
    pub failures: Vec<BatchFailure>,
}

impl BatchResult {
    pub fn cached(&self) -> usize {
        self.predictions.iter().filter(|p| p.from_cache).count()
    }

    pub fn all_failed(&self) -> bool {
        !self.predictions.is_empty() && self.failures.len() == self.predictions.len()
    }
}

pub struct CompletionClient {
    config: BackendConfig,
    backend: Arc<dyn Backend>,
    cache: Arc<ResponseCache>,
    limiter: RateLimiter,
    offline: bool,
}

impl CompletionClient {
    pub fn new(config: BackendConfig, backend: Arc<dyn Backend>) -> Result<Self, BackendError> {
        config.validate()?;
        Ok(CompletionClient {
            limiter: RateLimiter::per_minute(config.requests_per_minute),
            config,
            backend,
            cache: Arc::new(ResponseCache::in_memory()),
            offline: false,
        })
    }

    pub fn with_cache(mut self, cache: Arc<ResponseCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn key(&self, prompt: &PromptBundle) -> String {
        cache_key(&self.config.model_id, self.config.temperature, &prompt.prompt_text)
    }

    /// Cache first; on a miss, call the backend with retries and store the answer.
    pub fn complete(&self, prompt: &PromptBundle) -> Result<RawResponse> {
        let key = self.key(prompt);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(RawResponse {
                text: hit.response_text,
                latency: Duration::ZERO,
                from_cache: true,
                timestamp: hit.timestamp,
            });
        }
        if self.offline && self.backend.is_live() {
            return Err(BackendError::Offline(self.config.backend_id.clone()).into());
        }
        let request = CompletionRequest {
            model_id: &self.config.model_id,
            temperature: self.config.temperature,
            prompt: &prompt.prompt_text,
        };
        let started = Instant::now();
        let mut attempt = 0u32;
        let text = loop {
            self.limiter.acquire();
            match self.backend.complete(&request) {
                Ok(text) if text.trim().is_empty() => {
                    return Err(BackendError::MalformedPayload("empty completion".into()).into())
                }
                Ok(text) => break text,
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    let delay = Duration::from_millis(self.config.backoff_ms)
                        .saturating_mul(1u32 << attempt.min(16));
                    log::debug!("{} attempt {} failed ({e}); retrying in {delay:?}", prompt.segment_id, attempt + 1);
                    std::thread::sleep(delay);
                    attempt += 1;
                }
                Err(BackendError::RateLimited(_)) => {
                    return Err(BackendError::RateLimitExhausted { attempts: attempt + 1 }.into())
                }
                Err(e) => return Err(e.into()),
            }
        };
        let stored = self.cache.insert(CacheRecord {
            model_id: self.config.model_id.clone(),
            prompt_hash: key,
            response_text: text,
            timestamp: Utc::now(),
        })?;
        Ok(RawResponse {
            text: stored.response_text,
            latency: started.elapsed(),
            from_cache: false,
            timestamp: stored.timestamp,
        })
    }

    /// Prompts that would need a backend call.
    pub fn uncached(&self, prompts: &[PromptBundle]) -> usize {
        prompts.iter().filter(|p| !self.cache.contains(&self.key(p))).count()
    }

    /// Classifies every prompt, keeping input order. Individual failures come
    /// back as `unparsable` predictions carrying the error text.
    pub fn classify_batch(&self, prompts: &[PromptBundle], taxonomy: &Taxonomy) -> Result<Vec<Prediction>> {
        Ok(self.classify_batch_detailed(prompts, taxonomy)?.predictions)
    }

    /// Like [`classify_batch`](Self::classify_batch), also reporting which
    /// prompts failed and why.
    pub fn classify_batch_detailed(&self, prompts: &[PromptBundle], taxonomy: &Taxonomy) -> Result<BatchResult> {
        if prompts.is_empty() {
            return Err(Error::Config("nothing to classify".into()));
        }
        if let Some(p) = prompts.iter().find(|p| p.taxonomy_name != taxonomy.name) {
            return Err(Error::Config(format!(
                "prompt for `{}` was built for taxonomy `{}`, not `{}`",
                p.segment_id, p.taxonomy_name, taxonomy.name
            )));
        }
        if self.offline && self.backend.is_live() {
            let missing = self.uncached(prompts);
            if missing > 0 {
                return Err(Error::Config(format!(
                    "offline mode: {missing} prompt(s) are not cached and profile `{}` is a live backend",
                    self.config.backend_id
                )));
            }
        }

        let slots: Vec<Mutex<Option<(Prediction, Option<Error>)>>> = prompts.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.min(prompts.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(prompt) = prompts.get(i) else { break };
                    *slots[i].lock().unwrap() = Some(self.predict(prompt, taxonomy));
                });
            }
        });
        let mut result = BatchResult::default();
        for slot in slots {
            let (prediction, failure) = slot.into_inner().unwrap().expect("every slot is filled");
            if let Some(error) = failure {
                result.failures.push(BatchFailure {
                    segment_id: prediction.segment_id.clone(),
                    error,
                });
            }
            result.predictions.push(prediction);
        }
        Ok(result)
    }

    fn predict(&self, prompt: &PromptBundle, taxonomy: &Taxonomy) -> (Prediction, Option<Error>) {
        let (predicted_label, raw_response, from_cache, timestamp, failure) = match self.complete(prompt) {
            Ok(raw) => (parse_label(&raw.text, taxonomy), raw.text, raw.from_cache, raw.timestamp, None),
            Err(e) => {
                log::warn!("{}: {e}", prompt.segment_id);
                (PredictedLabel::Unparsable, format!("error: {e}"), false, Utc::now(), Some(e))
            }
        };
        let prediction = Prediction {
            segment_id: prompt.segment_id.clone(),
            predicted_label,
            raw_response,
            backend_id: self.config.backend_id.clone(),
            model_id: self.config.model_id.clone(),
            from_cache,
            timestamp,
        };
        (prediction, failure)
    }
}
