//! Completion gateway: a chat-completion HTTP endpoint or a deterministic
//! planted mock, behind a persistent content-addressed cache.
//!
//! Identical concurrent prompts are coalesced into one request
//! (single-flight), in-flight requests are bounded by a semaphore, and every
//! fetched completion is written to the append-only cache before it is
//! returned, so interrupted experiments resume instead of re-spending.

mod cache;
mod endpoint;
mod mock;

pub use cache::{Cache, CacheLine};
pub use endpoint::EndpointConfig;
pub use mock::{DevTestCorrelation, PlantedMock, PlantedMockConfig};

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tokio::sync::{Mutex, OnceCell, Semaphore};

use crate::prompting::RenderedPrompt;

/// 256-bit digest of (model id, decoding parameters, prompt text), hex-encoded.
/// Cache lookups are keyed solely by this value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContentHash(String);

impl ContentHash {
    pub fn compute(model_id: &str, temperature: f64, max_output_tokens: u32, text: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(model_id.as_bytes());
        hasher.update([0]);
        hasher.update(temperature.to_le_bytes());
        hasher.update(max_output_tokens.to_le_bytes());
        hasher.update([0]);
        hasher.update(text.as_bytes());
        ContentHash(hex::encode(hasher.finalize()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for ContentHash {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Digest of the prompt text alone, recorded next to the full cache key.
pub fn prompt_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Network,
    Mock,
    Cache,
}

#[derive(Debug, Clone)]
pub struct Completion {
    pub output_text: String,
    pub source: Source,
    pub latency: Duration,
}

/// A cached completion as surfaced by [`Cache::get`].
#[derive(Debug, Clone)]
pub struct CompletionRecord {
    pub content_hash: ContentHash,
    pub output_text: String,
    pub latency: Duration,
    pub source: Source,
}

/// Evaluation-side context for one completion call. The HTTP backend ignores
/// it; the planted mock keys its deterministic draw on the permutation plus
/// the query identity (id or within-split ordinal).
#[derive(Debug, Clone, Copy)]
pub struct CallContext<'a> {
    pub permutation: &'a [usize],
    pub query_id: &'a str,
    pub query_ordinal: usize,
    pub gold: &'a str,
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("HTTP {status} for prompt {content_hash}: {message}")]
    Http {
        status: u16,
        content_hash: ContentHash,
        message: String,
    },
    #[error("retries exhausted after {attempts} attempts for prompt {content_hash}: {message}")]
    RetriesExhausted {
        attempts: u32,
        content_hash: ContentHash,
        message: String,
    },
    #[error("malformed completion response for prompt {content_hash}: {message}")]
    Protocol {
        content_hash: ContentHash,
        message: String,
    },
    #[error("cache I/O failed: {0}")]
    Cache(#[from] std::io::Error),
    #[error("permutation length {got} does not match the planted permutation length {expected}")]
    MockShape { expected: usize, got: usize },
    #[error("invalid gateway configuration: {0}")]
    Config(String),
}

#[derive(Default)]
struct Counters {
    network_requests: AtomicU64,
    retries: AtomicU64,
    cache_hits: AtomicU64,
    mock_calls: AtomicU64,
}

/// Point-in-time view of the gateway call counters; tests use this to prove
/// cache replays issue zero network calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterSnapshot {
    pub network_requests: u64,
    pub retries: u64,
    pub cache_hits: u64,
    pub mock_calls: u64,
}

// One gateway exists per experiment; the variant size gap is irrelevant.
#[allow(clippy::large_enum_variant)]
enum Backend {
    Endpoint {
        client: endpoint::EndpointClient,
        cache: Cache,
        inflight: Mutex<HashMap<ContentHash, Arc<OnceCell<String>>>>,
        semaphore: Arc<Semaphore>,
    },
    Mock(PlantedMock),
}

pub struct Gateway {
    backend: Backend,
    counters: Arc<Counters>,
    model_id: String,
}

impl Gateway {
    pub fn for_endpoint(config: EndpointConfig, cache_path: &Path) -> Result<Self, GatewayError> {
        config.validate()?;
        let model_id = config.model_id.clone();
        let semaphore = Arc::new(Semaphore::new(config.max_in_flight));
        let client = endpoint::EndpointClient::new(config)?;
        let cache = Cache::open(cache_path)?;
        Ok(Gateway {
            backend: Backend::Endpoint {
                client,
                cache,
                inflight: Mutex::new(HashMap::new()),
                semaphore,
            },
            counters: Arc::new(Counters::default()),
            model_id,
        })
    }

    pub fn for_mock(config: PlantedMockConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Gateway {
            backend: Backend::Mock(PlantedMock::new(config)),
            counters: Arc::new(Counters::default()),
            model_id: "planted-mock".into(),
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    /// Suggested evaluation fan-out: bounded by the endpoint's in-flight
    /// budget; the mock is a pure function, so fan-out buys nothing.
    pub fn parallelism(&self) -> usize {
        match &self.backend {
            Backend::Endpoint { client, .. } => client.config().max_in_flight,
            Backend::Mock(_) => 1,
        }
    }

    pub fn counters(&self) -> CounterSnapshot {
        CounterSnapshot {
            network_requests: self.counters.network_requests.load(Ordering::Relaxed),
            retries: self.counters.retries.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
            mock_calls: self.counters.mock_calls.load(Ordering::Relaxed),
        }
    }

    pub fn cache(&self) -> Option<&Cache> {
        match &self.backend {
            Backend::Endpoint { cache, .. } => Some(cache),
            Backend::Mock(_) => None,
        }
    }

    /// Obtains the completion for a rendered prompt: cache, then coalesced
    /// network fetch with retries; mock backends answer from the planted
    /// closed form.
    pub async fn complete(
        &self,
        prompt: &RenderedPrompt,
        ctx: &CallContext<'_>,
    ) -> Result<Completion, GatewayError> {
        let started = Instant::now();
        match &self.backend {
            Backend::Mock(mock) => {
                self.counters.mock_calls.fetch_add(1, Ordering::Relaxed);
                let output_text = mock.complete(ctx)?;
                Ok(Completion {
                    output_text,
                    source: Source::Mock,
                    latency: started.elapsed(),
                })
            }
            Backend::Endpoint {
                client,
                cache,
                inflight,
                semaphore,
            } => {
                let config = client.config();
                let hash = ContentHash::compute(
                    &self.model_id,
                    config.temperature,
                    config.max_output_tokens,
                    &prompt.text,
                );
                if let Some(record) = cache.get(&hash) {
                    self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                    return Ok(Completion {
                        output_text: record.output_text,
                        source: Source::Cache,
                        latency: started.elapsed(),
                    });
                }

                let cell = {
                    let mut map = inflight.lock().await;
                    map.entry(hash.clone()).or_default().clone()
                };
                let outcome = cell
                    .get_or_try_init(|| async {
                        // Lost a race against a finished leader? The cache
                        // already has it.
                        if let Some(record) = cache.get(&hash) {
                            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                            return Ok(record.output_text);
                        }
                        let _permit = semaphore
                            .acquire()
                            .await
                            .expect("semaphore is never closed");
                        let output = client.fetch(&prompt.text, &hash, &self.counters).await?;
                        cache.put(CacheLine {
                            hash: hash.to_string(),
                            model_id: self.model_id.clone(),
                            prompt_digest: prompt_digest(&prompt.text),
                            output_text: output.clone(),
                            timestamp: unix_timestamp(),
                        })?;
                        Ok::<String, GatewayError>(output)
                    })
                    .await
                    .cloned();
                inflight.lock().await.remove(&hash);
                Ok(Completion {
                    output_text: outcome?,
                    source: Source::Network,
                    latency: started.elapsed(),
                })
            }
        }
    }
}

fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default()
        .as_secs()
}
