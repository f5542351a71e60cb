//! The four embedding feature families.
//!
//! Each family packs texts with [`join_strings_list`], sends every batch as one
//! request string (batch members joined by a separator), and averages the
//! returned vectors.

use super::batch::{join_strings_list, Batch};
use super::provider::EmbeddingProvider;
use crate::error::{Error, Result};
use crate::ingest::UserCorpus;
use crate::lexfeat::{risk_message_partition, RiskLexicon};

fn embed_batches<P: EmbeddingProvider + ?Sized>(
    user_id: &str,
    batches: &[Batch],
    separator: &str,
    provider: &P,
) -> Result<Vec<Vec<f32>>> {
    let mut out = Vec::with_capacity(batches.len());
    for (i, batch) in batches.iter().enumerate() {
        let joined = batch
            .iter()
            .map(|c| c.text.as_str())
            .collect::<Vec<_>>()
            .join(separator);
        let provider_err = |message: String| Error::Provider {
            user_id: user_id.to_string(),
            batch: i,
            message,
        };
        let mut v = provider.embed(&[joined]).map_err(|e| provider_err(e.0))?;
        if v.len() != 1 || v[0].len() != provider.dimension() {
            return Err(provider_err(format!(
                "expected one vector of length {}",
                provider.dimension()
            )));
        }
        out.push(v.pop().expect("one vector"));
    }
    Ok(out)
}

/// Componentwise mean; zero vector for no inputs.
fn mean(vectors: &[Vec<f32>], dimension: usize) -> Vec<f64> {
    let mut acc = vec![0f64; dimension];
    if vectors.is_empty() {
        return acc;
    }
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += f64::from(*x);
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn embed_texts<P: EmbeddingProvider + ?Sized>(
    user_id: &str,
    texts: &[String],
    separator: &str,
    provider: &P,
) -> Result<Vec<f64>> {
    let batches = join_strings_list(texts, provider, provider.token_limit());
    let vectors = embed_batches(user_id, &batches, separator, provider)?;
    Ok(mean(&vectors, provider.dimension()))
}

fn replicated_texts(corpus: &UserCorpus) -> Vec<String> {
    corpus.replicated_messages().map(|m| m.text.clone()).collect()
}

/// Mean embedding of all of a user's messages, newline-joined per batch.
pub fn gpt_features<P: EmbeddingProvider + ?Sized>(
    corpus: &UserCorpus,
    provider: &P,
) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::Domain(format!("corpus of {} is empty", corpus.user_id)));
    }
    embed_texts(&corpus.user_id, &replicated_texts(corpus), "\n", provider)
}

/// Embedding of the user's risk-phrase stream joined by spaces; split into
/// token-limited pieces and averaged when too long. Zero vector when the
/// stream is empty.
pub fn gpt_riskw_features<P: EmbeddingProvider + ?Sized>(
    corpus: &UserCorpus,
    lexicon: &RiskLexicon,
    provider: &P,
) -> Result<Vec<f64>> {
    let stream = risk_message_partition(corpus, lexicon).risk_word_stream;
    embed_texts(&corpus.user_id, &stream, " ", provider)
}

/// Mean embedding of risk messages scaled by the risk-message ratio. Zero
/// vector when there are none.
pub fn gpt_riskm_features<P: EmbeddingProvider + ?Sized>(
    corpus: &UserCorpus,
    lexicon: &RiskLexicon,
    provider: &P,
) -> Result<Vec<f64>> {
    let part = risk_message_partition(corpus, lexicon);
    let texts: Vec<String> = part
        .risk_messages
        .iter()
        .flat_map(|m| std::iter::repeat_n(m.text.clone(), corpus.weight(m.app) as usize))
        .collect();
    let mut v = embed_texts(&corpus.user_id, &texts, "\n", provider)?;
    v.iter_mut().for_each(|x| *x *= part.risk_ratio);
    Ok(v)
}

/// Mean over days of each day's embedding (the day's messages newline-joined,
/// split and averaged when over the limit).
pub fn daily_embedding_features<P: EmbeddingProvider + ?Sized>(
    corpus: &UserCorpus,
    provider: &P,
) -> Result<Vec<f64>> {
    if corpus.is_empty() {
        return Err(Error::Domain(format!("corpus of {} is empty", corpus.user_id)));
    }
    let mut acc = vec![0f64; provider.dimension()];
    for msgs in corpus.days.values() {
        let texts: Vec<String> = msgs
            .iter()
            .flat_map(|m| std::iter::repeat_n(m.text.clone(), corpus.weight(m.app) as usize))
            .collect();
        let day = embed_texts(&corpus.user_id, &texts, "\n", provider)?;
        for (a, x) in acc.iter_mut().zip(day) {
            *a += x;
        }
    }
    let n = corpus.day_count() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::mock::{MockMode, MockProvider};
    use crate::embed::provider::{ProviderError, Tokenizer};
    use crate::ingest::{parse_timestamp, App, IngestConfig, Message};
    use chrono::Duration;
    use std::ops::Range;
    use std::sync::Mutex;

    fn corpus_from(days: &[&[&str]], app: App) -> UserCorpus {
        let base = parse_timestamp("2023-02-01T08:00:00Z").unwrap();
        let msgs = days.iter().enumerate().flat_map(|(d, texts)| {
            texts.iter().enumerate().map(move |(k, t)| {
                Message::new(
                    "u1",
                    app,
                    base + Duration::days(d as i64) + Duration::minutes(k as i64),
                    *t,
                )
                .unwrap()
            })
        });
        UserCorpus::new("u1", msgs, IngestConfig::default().weight_table()).unwrap()
    }

    fn corpus(days: &[&[&str]]) -> UserCorpus {
        corpus_from(days, App::Tinder)
    }

    fn lexicon() -> RiskLexicon {
        RiskLexicon::new([("drugs", vec!["meth", "tina"]), ("party", vec!["party"])]).unwrap()
    }

    /// Records every request string; delegates vectors to a mock.
    struct Recorder {
        inner: MockProvider,
        seen: Mutex<Vec<String>>,
    }

    impl Recorder {
        fn new(inner: MockProvider) -> Self {
            Recorder {
                inner,
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Tokenizer for Recorder {
        fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
            self.inner.token_spans(text)
        }
    }

    impl EmbeddingProvider for Recorder {
        fn dimension(&self) -> usize {
            self.inner.dimension()
        }
        fn token_limit(&self) -> usize {
            self.inner.token_limit()
        }
        fn embed(&self, texts: &[String]) -> std::result::Result<Vec<Vec<f32>>, ProviderError> {
            self.seen.lock().unwrap().extend(texts.iter().cloned());
            self.inner.embed(texts)
        }
        fn fingerprint(&self) -> String {
            self.inner.fingerprint()
        }
    }

    fn single(p: &MockProvider, text: &str) -> Vec<f64> {
        p.embed(&[text.to_string()]).unwrap()[0]
            .iter()
            .map(|&x| f64::from(x))
            .collect()
    }

    #[test]
    fn single_batch_equals_its_embedding() {
        let p = MockProvider::with_seed(5);
        let c = corpus(&[&["hello there", "general"]]);
        assert_eq!(gpt_features(&c, &p).unwrap(), single(&p, "hello there\ngeneral"));
    }

    #[test]
    fn two_batches_average() {
        let p = MockProvider::new(16, 3, 5);
        let c = corpus(&[&["a b", "c d"]]);
        let v1 = single(&p, "a b");
        let v2 = single(&p, "c d");
        let got = gpt_features(&c, &p).unwrap();
        for i in 0..16 {
            assert!((got[i] - (v1[i] + v2[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grindr_messages_are_replicated() {
        let rec = Recorder::new(MockProvider::with_seed(1));
        gpt_features(&corpus_from(&[&["hey", "you"]], App::Grindr), &rec).unwrap();
        assert_eq!(*rec.seen.lock().unwrap(), vec!["hey\nhey\nyou\nyou".to_string()]);
    }

    #[test]
    fn deterministic_across_providers_with_same_seed() {
        let c = corpus(&[&["x y z"], &["meth party"]]);
        let a = gpt_features(&c, &MockProvider::with_seed(11)).unwrap();
        let b = gpt_features(&c, &MockProvider::with_seed(11)).unwrap();
        assert_eq!(
            a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn riskw_without_risk_words_is_zero() {
        let p = MockProvider::with_seed(1);
        let v = gpt_riskw_features(&corpus(&[&["nothing here"]]), &lexicon(), &p).unwrap();
        assert_eq!(v, vec![0.0; 64]);
        assert_eq!(p.requests(), 0);
    }

    #[test]
    fn riskw_embeds_the_joined_stream() {
        let rec = Recorder::new(MockProvider::with_seed(1));
        let c = corpus(&[&["Meth then a party", "more meth"]]);
        gpt_riskw_features(&c, &lexicon(), &rec).unwrap();
        assert_eq!(*rec.seen.lock().unwrap(), vec!["meth party meth".to_string()]);
    }

    #[test]
    fn riskw_depends_only_on_stream() {
        let p = MockProvider::with_seed(1);
        let a = gpt_riskw_features(&corpus(&[&["meth!", "tina"]]), &lexicon(), &p).unwrap();
        let b = gpt_riskw_features(&corpus(&[&["so much meth"], &["x tina y"]]), &lexicon(), &p)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn riskw_long_stream_is_split_and_averaged() {
        let p = MockProvider::new(8, 2, 3);
        let c = corpus(&[&["meth tina party"]]);
        let got = gpt_riskw_features(&c, &lexicon(), &p).unwrap();
        let v1 = single(&p, "meth tina");
        let v2 = single(&p, "party");
        for i in 0..8 {
            assert!((got[i] - (v1[i] + v2[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn riskm_all_risk_is_plain_mean() {
        let p = MockProvider::with_seed(2);
        let c = corpus(&[&["meth", "party"]]);
        assert_eq!(
            gpt_riskm_features(&c, &lexicon(), &p).unwrap(),
            gpt_features(&c, &p).unwrap()
        );
    }

    #[test]
    fn riskm_scaled_by_ratio() {
        let p = MockProvider::with_seed(2);
        let mut texts = vec!["plain words"; 8];
        texts.extend(["meth", "party"]);
        let c = corpus(&[&texts]);
        let m = single(&p, "meth\nparty");
        let got = gpt_riskm_features(&c, &lexicon(), &p).unwrap();
        for i in 0..64 {
            assert!((got[i] - 0.2 * m[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn riskm_without_risk_is_zero() {
        let p = MockProvider::with_seed(2);
        let v = gpt_riskm_features(&corpus(&[&["calm"]]), &lexicon(), &p).unwrap();
        assert_eq!(v, vec![0.0; 64]);
    }

    #[test]
    fn daily_one_day_and_two_days() {
        let p = MockProvider::with_seed(4);
        let one = corpus(&[&["good morning", "coffee"]]);
        assert_eq!(
            daily_embedding_features(&one, &p).unwrap(),
            single(&p, "good morning\ncoffee")
        );
        let two = corpus(&[&["day one"], &["day two"]]);
        let d1 = single(&p, "day one");
        let d2 = single(&p, "day two");
        let got = daily_embedding_features(&two, &p).unwrap();
        for i in 0..64 {
            assert!((got[i] - (d1[i] + d2[i]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn daily_is_sensitive_to_day_assignment() {
        let p = MockProvider::with_seed(4);
        let a = daily_embedding_features(&corpus(&[&["alpha", "beta"], &["gamma"]]), &p).unwrap();
        let b = daily_embedding_features(&corpus(&[&["alpha"], &["beta", "gamma"]]), &p).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn scaling_embeddings_scales_features() {
        let c = corpus(&[&["a b c"], &["d e"]]);
        let base = gpt_features(&c, &MockProvider::with_seed(3)).unwrap();
        let scaled = gpt_features(&c, &MockProvider::with_seed(3).with_scale(3.0)).unwrap();
        for (b, s) in base.iter().zip(&scaled) {
            assert!((s - 3.0 * b).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_corpus_is_domain_error() {
        let c = UserCorpus::new("u", Vec::new(), Default::default()).unwrap();
        let p = MockProvider::with_seed(1).with_mode(MockMode::Echo);
        assert!(matches!(gpt_features(&c, &p), Err(Error::Domain(_))));
        assert!(matches!(daily_embedding_features(&c, &p), Err(Error::Domain(_))));
    }

    struct Failing;

    impl Tokenizer for Failing {
        fn token_spans(&self, text: &str) -> Vec<Range<usize>> {
            crate::embed::SimpleTokenizer.token_spans(text)
        }
    }

    impl EmbeddingProvider for Failing {
        fn dimension(&self) -> usize {
            4
        }
        fn token_limit(&self) -> usize {
            100
        }
        fn embed(&self, _: &[String]) -> std::result::Result<Vec<Vec<f32>>, ProviderError> {
            Err(ProviderError("boom".into()))
        }
        fn fingerprint(&self) -> String {
            "failing".into()
        }
    }

    #[test]
    fn provider_failure_carries_user_and_batch() {
        let err = gpt_features(&corpus(&[&["x"]]), &Failing).unwrap_err();
        match &err {
            Error::Provider { user_id, batch, .. } => {
                assert_eq!(user_id, "u1");
                assert_eq!(*batch, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.exit_code(), 3);
    }
}
