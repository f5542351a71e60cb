use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct ProviderError(pub String);

/// Splits text into tokens, reported as byte ranges into the input.
pub trait Tokenizer {
    /// Byte spans of the tokens of `text`, in order and non-overlapping.
    fn token_spans(&self, text: &str) -> Vec<Range<usize>>;

    fn count_tokens(&self, text: &str) -> usize {
        self.token_spans(text).len()
    }

    /// Cuts `text` into pieces of at most `max_tokens` tokens each. Each cut
    /// falls at the start of a token, so concatenating the pieces gives back
    /// `text` exactly.
    fn split_to_limit(&self, text: &str, max_tokens: usize) -> Vec<String> {
        let spans = self.token_spans(text);
        if spans.len() <= max_tokens || max_tokens == 0 {
            return vec![text.to_string()];
        }
        let mut cuts: Vec<usize> = spans
            .iter()
            .step_by(max_tokens)
            .skip(1)
            .map(|s| s.start)
            .collect();
        cuts.insert(0, 0);
        cuts.push(text.len());
        cuts.windows(2).map(|w| text[w[0]..w[1]].to_string()).collect()
    }
}

/// Word-and-punctuation tokenizer: maximal alphanumeric runs, and every other
/// non-whitespace character on its own. Whitespace never forms a token.
///
/// It over-counts relative to subword tokenizers on punctuation and under-counts
/// on long rare words; configure a token limit with headroom for remote models.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleTokenizer;

impl Tokenizer for SimpleTokenizer {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        let mut run_start: Option<usize> = None;
        for (i, c) in text.char_indices() {
            if c.is_alphanumeric() {
                run_start.get_or_insert(i);
                continue;
            }
            if let Some(s) = run_start.take() {
                spans.push(s..i);
            }
            if !c.is_whitespace() {
                spans.push(i..i + c.len_utf8());
            }
        }
        if let Some(s) = run_start {
            spans.push(s..text.len());
        }
        spans
    }
}

/// Text → fixed-length vector service with a tokenizer and a per-input token limit.
pub trait EmbeddingProvider: Tokenizer + Send + Sync {
    fn dimension(&self) -> usize;

    fn token_limit(&self) -> usize;

    /// One vector of length [`dimension`](Self::dimension) per input, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;

    /// Identifies everything that determines the vectors (model, seed, ...);
    /// used to partition the on-disk cache.
    fn fingerprint(&self) -> String;
}

impl<P: Tokenizer + ?Sized> Tokenizer for &P {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        (**self).token_spans(text)
    }
}

impl<P: Tokenizer + ?Sized> Tokenizer for Box<P> {
    fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
        (**self).token_spans(text)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }
    fn token_limit(&self) -> usize {
        (**self).token_limit()
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        (**self).embed(texts)
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}
