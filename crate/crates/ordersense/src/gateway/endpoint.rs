//! Chat-completion HTTP client with greedy decoding, retries and backoff.
//!
//! The wire shape is the common chat-completions JSON (configurable path),
//! which covers hosted APIs and local inference servers alike.

use std::sync::atomic::Ordering;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ContentHash, Counters, GatewayError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    #[serde(default = "default_path")]
    pub path: String,
    pub model_id: String,
    /// Greedy decoding by default; sampling noise would confound the
    /// order-sensitivity statistics.
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Name of the environment variable holding the bearer token, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
}

fn default_path() -> String {
    "/v1/chat/completions".into()
}
fn default_max_output_tokens() -> u32 {
    256
}
fn default_timeout_secs() -> u64 {
    60
}
fn default_max_retries() -> u32 {
    3
}
fn default_max_in_flight() -> usize {
    4
}
fn default_backoff_ms() -> u64 {
    200
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.temperature < 0.0 {
            return Err(GatewayError::Config(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_in_flight < 1 {
            return Err(GatewayError::Config("max_in_flight must be >= 1".into()));
        }
        if self.base_url.is_empty() {
            return Err(GatewayError::Config("base_url must not be empty".into()));
        }
        Ok(())
    }

    fn url(&self) -> String {
        format!(
            "{}/{}",
            self.base_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

pub(super) struct EndpointClient {
    config: EndpointConfig,
    url: String,
    api_key: Option<String>,
    http: reqwest::Client,
}

enum AttemptError {
    Retryable(String),
    Fatal(GatewayError),
}

impl EndpointClient {
    pub(super) fn new(config: EndpointConfig) -> Result<Self, GatewayError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GatewayError::Config(format!(
                    "credential environment variable `{var}` is not set"
                ))
            })?),
            None => None,
        };
        let http = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Config(format!("failed to build HTTP client: {e}")))?;
        let url = config.url();
        Ok(EndpointClient {
            config,
            url,
            api_key,
            http,
        })
    }

    pub(super) fn config(&self) -> &EndpointConfig {
        &self.config
    }

    /// One completion with bounded retries on transient failures (429, 5xx,
    /// timeouts, connection errors) and exponential backoff between attempts.
    pub(super) async fn fetch(
        &self,
        text: &str,
        hash: &ContentHash,
        counters: &Counters,
    ) -> Result<String, GatewayError> {
        let mut last_message = String::new();
        for attempt in 0..=self.config.max_retries {
            if attempt > 0 {
                counters.retries.fetch_add(1, Ordering::Relaxed);
                let delay = self
                    .config
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(6));
                tokio::time::sleep(Duration::from_millis(delay)).await;
            }
            counters.network_requests.fetch_add(1, Ordering::Relaxed);
            match self.attempt(text, hash).await {
                Ok(content) => return Ok(content),
                Err(AttemptError::Retryable(message)) => last_message = message,
                Err(AttemptError::Fatal(error)) => return Err(error),
            }
        }
        Err(GatewayError::RetriesExhausted {
            attempts: self.config.max_retries + 1,
            content_hash: hash.clone(),
            message: last_message,
        })
    }

    async fn attempt(&self, text: &str, hash: &ContentHash) -> Result<String, AttemptError> {
        let body = ChatRequest {
            model: &self.config.model_id,
            messages: [ChatMessage {
                role: "user",
                content: text,
            }],
            temperature: self.config.temperature,
            max_tokens: self.config.max_output_tokens,
        };
        let mut request = self.http.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request.send().await.map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                AttemptError::Retryable(e.to_string())
            } else {
                AttemptError::Fatal(GatewayError::Protocol {
                    content_hash: hash.clone(),
                    message: e.to_string(),
                })
            }
        })?;

        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(AttemptError::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(AttemptError::Fatal(GatewayError::Http {
                status: status.as_u16(),
                content_hash: hash.clone(),
                message: response.text().await.unwrap_or_default(),
            }));
        }

        let parsed: ChatResponse = response.json().await.map_err(|e| {
            AttemptError::Fatal(GatewayError::Protocol {
                content_hash: hash.clone(),
                message: e.to_string(),
            })
        })?;
        match parsed.choices.into_iter().next() {
            Some(choice) => Ok(choice.message.content),
            None => Err(AttemptError::Fatal(GatewayError::Protocol {
                content_hash: hash.clone(),
                message: "response carried no choices".into(),
            })),
        }
    }
}
