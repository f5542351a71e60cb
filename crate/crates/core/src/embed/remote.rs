use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use super::provider::{EmbeddingProvider, ProviderError, SimpleTokenizer, Tokenizer};
use super::rate::{Clock, RateLimiter, SystemClock};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "EMBED_API_KEY";

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub dimension: usize,
    pub token_limit: usize,
    pub requests_per_minute: usize,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_max: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, dimension: usize) -> Self {
        RemoteConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            dimension,
            token_limit: 8191,
            requests_per_minute: 60,
            max_retries: 5,
            backoff_base: Duration::from_millis(500),
            backoff_max: Duration::from_secs(30),
            timeout: Duration::from_secs(60),
        }
    }
}

/// HTTP embeddings client speaking the common `{"model", "input": [...]}` →
/// `{"data": [{"index", "embedding"}]}` protocol.
///
/// Every attempt, retries included, passes through the rate limiter. Retries
/// cover transport errors, 429 and 5xx, with exponential backoff capped at
/// `backoff_max`.
pub struct RemoteProvider {
    cfg: RemoteConfig,
    agent: ureq::Agent,
    limiter: RateLimiter,
    clock: Arc<dyn Clock>,
    attempts: AtomicUsize,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f32>,
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

impl RemoteProvider {
    pub fn new(cfg: RemoteConfig) -> Self {
        Self::with_clock(cfg, Arc::new(SystemClock::default()))
    }

    pub fn with_clock(cfg: RemoteConfig, clock: Arc<dyn Clock>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(cfg.timeout))
            .build()
            .into();
        let limiter = RateLimiter::per_minute(cfg.requests_per_minute, Arc::clone(&clock));
        RemoteProvider {
            cfg,
            agent,
            limiter,
            clock,
            attempts: AtomicUsize::new(0),
        }
    }

    /// HTTP attempts made so far, including retries.
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::Relaxed)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 2u32.saturating_pow(attempt);
        self.cfg
            .backoff_base
            .saturating_mul(factor)
            .min(self.cfg.backoff_max)
    }

    fn attempt(&self, body: &str, expected: usize) -> Result<Vec<Vec<f32>>, Failure> {
        self.limiter.acquire();
        self.attempts.fetch_add(1, Ordering::Relaxed);
        let mut req = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.cfg.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send(body)
            .map_err(|e| Failure::Retryable(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("reading body: {e}")))?;
        if status == 429 || status >= 500 {
            return Err(Failure::Retryable(format!("HTTP {status}: {text}")));
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(format!("HTTP {status}: {text}")));
        }
        let parsed: EmbeddingResponse = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(format!("bad response JSON: {e}")))?;
        let mut out: Vec<Option<Vec<f32>>> = vec![None; expected];
        for item in parsed.data {
            if item.embedding.len() != self.cfg.dimension {
                return Err(Failure::Fatal(format!(
                    "embedding of length {} (expected {})",
                    item.embedding.len(),
                    self.cfg.dimension
                )));
            }
            match out.get_mut(item.index) {
                Some(slot @ None) => *slot = Some(item.embedding),
                _ => return Err(Failure::Fatal(format!("bad or repeated index {}", item.index))),
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Failure::Fatal(format!("missing index {i}"))))
            .collect()
    }
}

impl Tokenizer for RemoteProvider {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        SimpleTokenizer.token_spans(text)
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn dimension(&self) -> usize {
        self.cfg.dimension
    }

    fn token_limit(&self) -> usize {
        self.cfg.token_limit
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let body = serde_json::json!({ "model": self.cfg.model, "input": texts }).to_string();
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            match self.attempt(&body, texts.len()) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(msg)) => return Err(ProviderError(msg)),
                Err(Failure::Retryable(msg)) => {
                    log::warn!("embedding request attempt {} failed: {msg}", attempt + 1);
                    last = msg;
                    if attempt < self.cfg.max_retries {
                        self.clock.sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(ProviderError(format!(
            "gave up after {} attempts: {last}",
            self.cfg.max_retries + 1
        )))
    }

    fn fingerprint(&self) -> String {
        format!(
            "remote;endpoint={};model={};dim={}",
            self.cfg.endpoint, self.cfg.model, self.cfg.dimension
        )
    }
}
