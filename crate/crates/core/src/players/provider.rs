use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("credential env var `{0}` is not set")]
    MissingCredential(String),
    #[error("provider request failed: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider response could not be decoded: {0}")]
    Decode(String),
}

impl ProviderError {
    fn is_retryable(&self) -> bool {
        match self {
            Self::Transport(_) => true,
            Self::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Connection settings for a chat-completion provider. The credential itself
/// is only ever read from the named env var.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub name: String,
    pub endpoint: String,
    pub model: String,
    pub credential_env: String,
    #[serde(default = "default_max_concurrent")]
    pub max_concurrent: usize,
}

fn default_max_concurrent() -> usize {
    4
}

impl ProviderConfig {
    pub fn check_credential(&self) -> Result<(), ProviderError> {
        match std::env::var(&self.credential_env) {
            Ok(v) if !v.is_empty() => Ok(()),
            _ => Err(ProviderError::MissingCredential(self.credential_env.clone())),
        }
    }
}

/// Chat-style text in, text out.
pub trait ChatClient: Send + Sync {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError>;
}

struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut free = self.free.lock().expect("permits");
        while *free == 0 {
            free = self.cv.wait(free).expect("permits");
        }
        *free -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("permits") += 1;
        self.0.cv.notify_one();
    }
}

/// OpenAI-compatible `POST {endpoint}/chat/completions` client with bounded
/// concurrency and exponential backoff on 429, 5xx and transport errors.
pub struct OpenAiChatClient {
    config: ProviderConfig,
    agent: ureq::Agent,
    permits: Permits,
    retries: usize,
    backoff: Duration,
}

impl OpenAiChatClient {
    pub fn new(config: ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = Permits { free: Mutex::new(config.max_concurrent.max(1)), cv: Condvar::new() };
        Self { config, agent, permits, retries: 3, backoff: Duration::from_millis(500) }
    }

    pub fn with_retry(mut self, retries: usize, backoff: Duration) -> Self {
        self.retries = retries;
        self.backoff = backoff;
        self
    }

    fn request_once(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        let key = std::env::var(&self.config.credential_env)
            .map_err(|_| ProviderError::MissingCredential(self.config.credential_env.clone()))?;
        let url = format!("{}/chat/completions", self.config.endpoint.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let _permit = self.permits.acquire();
        let mut response = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        if status != 200 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(ProviderError::Status { status, body });
        }
        let value: serde_json::Value =
            response.body_mut().read_json().map_err(|e| ProviderError::Decode(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::Decode("missing choices[0].message.content".into()))
    }
}

impl ChatClient for OpenAiChatClient {
    fn complete(&self, prompt: &str, temperature: f64) -> Result<String, ProviderError> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.request_once(prompt, temperature) {
                Err(e) if e.is_retryable() && attempt < self.retries => {
                    tracing::warn!(provider = %self.config.name, attempt, %e, "retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}
