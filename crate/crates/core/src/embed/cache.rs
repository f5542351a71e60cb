//! On-disk embedding cache.
//!
//! Layout: `<root>/<provider fingerprint hash>/<content sha256>.bin`, each
//! file a little-endian `u32` dimension followed by that many `f32`s.

use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use super::provider::{EmbeddingProvider, ProviderError, Tokenizer};
use crate::error::{Error, Result};
use crate::seed::sha256_hex;

pub fn encode_vector(v: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * v.len());
    out.extend_from_slice(&(v.len() as u32).to_le_bytes());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_vector(bytes: &[u8]) -> Option<Vec<f32>> {
    let (head, rest) = bytes.split_first_chunk::<4>()?;
    let dim = u32::from_le_bytes(*head) as usize;
    if rest.len() != dim * 4 {
        return None;
    }
    Some(
        rest.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")))
            .collect(),
    )
}

#[derive(Debug)]
pub struct EmbeddingCache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl EmbeddingCache {
    pub fn open(root: &Path, provider_fingerprint: &str) -> Result<Self> {
        let dir = root.join(&sha256_hex(provider_fingerprint.as_bytes())[..16]);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(EmbeddingCache {
            dir,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, text: &str) -> PathBuf {
        self.dir.join(format!("{}.bin", sha256_hex(text.as_bytes())))
    }

    /// Cached vector for `text`, if present and of the expected dimension.
    pub fn get(&self, text: &str, dimension: usize) -> Option<Vec<f32>> {
        let found = fs::read(self.path_for(text))
            .ok()
            .and_then(|b| decode_vector(&b))
            .filter(|v| v.len() == dimension);
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Stores via write-to-temp then rename, so readers never see partial files.
    pub fn put(&self, text: &str, v: &[f32]) -> Result<()> {
        let path = self.path_for(text);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(&encode_vector(v)).map_err(|e| Error::io(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

/// Serves from the cache and forwards only misses to the inner provider.
pub struct CachedProvider<P> {
    inner: P,
    cache: EmbeddingCache,
}

impl<P: EmbeddingProvider> CachedProvider<P> {
    pub fn new(inner: P, cache_root: &Path) -> Result<Self> {
        let cache = EmbeddingCache::open(cache_root, &inner.fingerprint())?;
        Ok(CachedProvider { inner, cache })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl<P: EmbeddingProvider> Tokenizer for CachedProvider<P> {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        self.inner.token_spans(text)
    }
}

impl<P: EmbeddingProvider> EmbeddingProvider for CachedProvider<P> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn token_limit(&self) -> usize {
        self.inner.token_limit()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let dim = self.inner.dimension();
        let mut out: Vec<Option<Vec<f32>>> =
            texts.iter().map(|t| self.cache.get(t, dim)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let request: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let fresh = self.inner.embed(&request)?;
            if fresh.len() != request.len() {
                return Err(ProviderError(format!(
                    "provider returned {} vectors for {} inputs",
                    fresh.len(),
                    request.len()
                )));
            }
            for (&i, v) in missing.iter().zip(fresh) {
                if let Err(e) = self.cache.put(&texts[i], &v) {
                    log::warn!("embedding cache write failed: {e}");
                }
                out[i] = Some(v);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("filled")).collect())
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}
