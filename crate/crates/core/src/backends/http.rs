//! Chat-completion providers over HTTPS.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::{AuthScheme, Backend, BackendConfig, BackendError, CompletionRequest, Provider};

pub const ANTHROPIC_VERSION: &str = "2023-06-01";
const ANTHROPIC_MAX_TOKENS: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// The network edge. Everything above it is provider logic and can be tested
/// with a scripted transport.
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpResponse, BackendError>;
}

#[derive(Debug, Clone)]
pub struct ReqwestTransport {
    client: reqwest::blocking::Client,
}

impl ReqwestTransport {
    pub fn new(timeout: Duration) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(format!("cannot build HTTP client: {e}")))?;
        Ok(ReqwestTransport { client })
    }
}

impl Transport for ReqwestTransport {
    fn post(&self, url: &str, headers: &[(String, String)], body: &Value) -> Result<HttpResponse, BackendError> {
        let mut request = self.client.post(url).json(body);
        for (name, value) in headers {
            request = request.header(name, value);
        }
        let response = request.send().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout(e.to_string())
            } else {
                BackendError::Transient(e.to_string())
            }
        })?;
        let status = response.status().as_u16();
        let body = response
            .text()
            .map_err(|e| BackendError::Transient(format!("reading response body: {e}")))?;
        Ok(HttpResponse { status, body })
    }
}

pub struct HttpBackend {
    provider: Provider,
    auth: AuthScheme,
    base_url: String,
    api_key: String,
    transport: Arc<dyn Transport>,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("provider", &self.provider)
            .field("base_url", &self.base_url)
            .finish_non_exhaustive()
    }
}

impl HttpBackend {
    pub fn new(config: &BackendConfig, api_key: String, transport: Arc<dyn Transport>) -> Self {
        HttpBackend {
            provider: config.provider,
            auth: config.auth_scheme(),
            base_url: config.base_url.trim_end_matches('/').to_string(),
            api_key,
            transport,
        }
    }

    fn endpoint(&self) -> String {
        match self.provider {
            Provider::Anthropic => format!("{}/messages", self.base_url),
            _ => format!("{}/chat/completions", self.base_url),
        }
    }

    fn headers(&self) -> Vec<(String, String)> {
        let mut headers = match self.auth {
            AuthScheme::Bearer => vec![("authorization".to_string(), format!("Bearer {}", self.api_key))],
            AuthScheme::XApiKey => vec![("x-api-key".to_string(), self.api_key.clone())],
        };
        if self.provider == Provider::Anthropic {
            headers.push(("anthropic-version".into(), ANTHROPIC_VERSION.into()));
        }
        headers
    }

    /// JSON body for a single-user-message conversation.
    pub fn request_body(&self, request: &CompletionRequest<'_>) -> Value {
        let messages = json!([{ "role": "user", "content": request.prompt }]);
        match self.provider {
            Provider::Anthropic => json!({
                "model": request.model_id,
                "max_tokens": ANTHROPIC_MAX_TOKENS,
                "temperature": request.temperature,
                "messages": messages,
            }),
            _ => json!({
                "model": request.model_id,
                "temperature": request.temperature,
                "messages": messages,
            }),
        }
    }

    fn extract_text(&self, body: &str) -> Result<String, BackendError> {
        let value: Value = serde_json::from_str(body)
            .map_err(|e| BackendError::MalformedPayload(format!("response is not JSON: {e}")))?;
        let text = match self.provider {
            Provider::Anthropic => value["content"].as_array().map(|blocks| {
                blocks
                    .iter()
                    .filter_map(|b| b["text"].as_str())
                    .collect::<String>()
            }),
            _ => value["choices"][0]["message"]["content"].as_str().map(str::to_string),
        };
        match text {
            Some(t) if !t.trim().is_empty() => Ok(t),
            Some(_) => Err(BackendError::MalformedPayload("empty completion".into())),
            None => Err(BackendError::MalformedPayload("no completion text in response".into())),
        }
    }
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

impl Backend for HttpBackend {
    fn is_live(&self) -> bool {
        true
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, BackendError> {
        let response = self
            .transport
            .post(&self.endpoint(), &self.headers(), &self.request_body(request))?;
        match response.status {
            200..=299 => self.extract_text(&response.body),
            401 | 403 => Err(BackendError::Auth(snippet(&response.body))),
            408 => Err(BackendError::Timeout(snippet(&response.body))),
            429 => Err(BackendError::RateLimited(snippet(&response.body))),
            500..=599 => Err(BackendError::Transient(format!(
                "HTTP {}: {}",
                response.status,
                snippet(&response.body)
            ))),
            status => Err(BackendError::Rejected {
                status,
                body: snippet(&response.body),
            }),
        }
    }
}
