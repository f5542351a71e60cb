use std::collections::HashMap;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand_distr::{Distribution, StandardNormal};

use super::provider::{EmbeddingProvider, ProviderError, SimpleTokenizer, Tokenizer};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockMode {
    /// Unit-norm sum of per-token Gaussian directions: texts sharing words get
    /// similar vectors.
    BagOfWords,
    /// `v[0]` is the UTF-8 byte length and `v[1..]` the leading bytes, so a
    /// vector identifies its input. Not unit-norm.
    Echo,
}

/// Offline, deterministic provider. Each vector is a pure function of
/// `(seed, text)`, times `scale`.
#[derive(Debug)]
pub struct MockProvider {
    dimension: usize,
    token_limit: usize,
    seed: u64,
    scale: f32,
    mode: MockMode,
    requests: AtomicUsize,
    texts_embedded: AtomicUsize,
    token_vectors: Mutex<HashMap<String, Arc<[f64]>>>,
}

impl MockProvider {
    pub const DEFAULT_DIMENSION: usize = 64;
    pub const DEFAULT_TOKEN_LIMIT: usize = 8191;

    pub fn new(dimension: usize, token_limit: usize, seed: u64) -> Self {
        assert!(dimension > 0 && token_limit > 0);
        MockProvider {
            dimension,
            token_limit,
            seed,
            scale: 1.0,
            mode: MockMode::BagOfWords,
            requests: AtomicUsize::new(0),
            texts_embedded: AtomicUsize::new(0),
            token_vectors: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(Self::DEFAULT_DIMENSION, Self::DEFAULT_TOKEN_LIMIT, seed)
    }

    pub fn with_scale(mut self, scale: f32) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_mode(mut self, mode: MockMode) -> Self {
        self.mode = mode;
        self
    }

    /// Number of `embed` calls served.
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn texts_embedded(&self) -> usize {
        self.texts_embedded.load(Ordering::Relaxed)
    }

    /// Recovers the (possibly truncated) input of an echo-mode vector.
    pub fn decode_echo(v: &[f32]) -> String {
        let len = v[0] as usize;
        let bytes: Vec<u8> = v[1..].iter().take(len).map(|&b| b as u8).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    }

    fn token_vector(&self, token: &str) -> Arc<[f64]> {
        if let Some(v) = self.token_vectors.lock().expect("poisoned").get(token) {
            return Arc::clone(v);
        }
        let mut rng = seed::rng(self.seed, token);
        let v: Arc<[f64]> = (0..self.dimension)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        self.token_vectors
            .lock()
            .expect("poisoned")
            .insert(token.to_string(), Arc::clone(&v));
        v
    }

    fn embed_one(&self, text: &str) -> Vec<f32> {
        match self.mode {
            MockMode::Echo => {
                let mut v = vec![0f32; self.dimension];
                v[0] = text.len() as f32;
                for (slot, b) in v[1..].iter_mut().zip(text.bytes()) {
                    *slot = f32::from(b);
                }
                v.iter().map(|x| x * self.scale).collect()
            }
            MockMode::BagOfWords => {
                let mut acc = vec![0f64; self.dimension];
                let spans = SimpleTokenizer.token_spans(text);
                if spans.is_empty() {
                    // Token-free text still needs a unit direction of its own.
                    let v = self.token_vector(&format!("\u{0}raw:{text}"));
                    acc.copy_from_slice(&v);
                }
                for span in spans {
                    let tok = text[span].to_lowercase();
                    for (a, x) in acc.iter_mut().zip(self.token_vector(&tok).iter()) {
                        *a += x;
                    }
                }
                let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
                acc.iter()
                    .map(|x| (x / norm) as f32 * self.scale)
                    .collect()
            }
        }
    }
}

impl Tokenizer for MockProvider {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        SimpleTokenizer.token_spans(text)
    }
}

impl EmbeddingProvider for MockProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn token_limit(&self) -> usize {
        self.token_limit
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.texts_embedded.fetch_add(texts.len(), Ordering::Relaxed);
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn fingerprint(&self) -> String {
        format!(
            "mock;mode={:?};dim={};seed={};scale={}",
            self.mode, self.dimension, self.seed, self.scale
        )
    }
}
