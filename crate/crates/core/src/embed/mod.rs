//! Embedding providers, token-budget batching and embedding feature families.

mod batch;
mod cache;
mod features;
mod mock;
mod provider;
mod rate;
mod remote;

use serde::{Deserialize, Serialize};

pub use batch::{flatten, join_strings_list, Batch, Chunk};
pub use cache::{decode_vector, encode_vector, CachedProvider, EmbeddingCache};
pub use features::{
    daily_embedding_features, gpt_features, gpt_riskm_features, gpt_riskw_features,
};
pub use mock::{MockMode, MockProvider};
pub use provider::{EmbeddingProvider, ProviderError, SimpleTokenizer, Tokenizer};
pub use rate::{Clock, ManualClock, RateLimiter, SystemClock};
pub use remote::{RemoteConfig, RemoteProvider, API_KEY_ENV};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Remote,
}

fn default_dimension() -> usize {
    MockProvider::DEFAULT_DIMENSION
}
fn default_token_limit() -> usize {
    MockProvider::DEFAULT_TOKEN_LIMIT
}
fn default_model() -> String {
    "text-embedding-ada-002".to_string()
}
fn default_rpm() -> usize {
    60
}
fn default_retries() -> u32 {
    5
}

/// Provider settings as they appear in the pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_token_limit")]
    pub token_limit: usize,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_rpm")]
    pub rpm: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::Mock,
            dimension: default_dimension(),
            token_limit: default_token_limit(),
            model: default_model(),
            endpoint: None,
            rpm: default_rpm(),
            seed: 0,
            max_retries: default_retries(),
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.token_limit == 0 || self.rpm == 0 {
            return Err(Error::Config(
                "provider dimension, token_limit and rpm must be positive".into(),
            ));
        }
        if self.kind == ProviderKind::Remote && self.endpoint.is_none() {
            return Err(Error::Config("remote provider needs an endpoint".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        self.validate()?;
        Ok(match self.kind {
            ProviderKind::Mock => Box::new(MockProvider::new(
                self.dimension,
                self.token_limit,
                self.seed,
            )),
            ProviderKind::Remote => {
                let mut cfg = RemoteConfig::new(
                    self.endpoint.clone().expect("validated"),
                    self.model.clone(),
                    self.dimension,
                );
                cfg.token_limit = self.token_limit;
                cfg.requests_per_minute = self.rpm;
                cfg.max_retries = self.max_retries;
                Box::new(RemoteProvider::new(cfg))
            }
        })
    }
}
