//! Risk-lexicon and category-dictionary features.
//!
//! Phrase matching is whole-token and case-insensitive on [`crate::text::tokenize`];
//! a multi-word phrase matches a contiguous run of tokens. Day-level
//! frequencies count a day once no matter how often a phrase occurs on it,
//! so app weights never change them.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::ingest::{Message, UserCorpus};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    /// Normalized phrase: its tokens joined by single spaces.
    pub phrase: String,
    pub tokens: Vec<String>,
    pub category: usize,
}

/// Risk phrases grouped into categories, in file order.
#[derive(Debug, Clone)]
pub struct RiskLexicon {
    entries: Vec<LexiconEntry>,
    categories: Vec<String>,
    by_first_token: HashMap<String, Vec<usize>>,
}

#[derive(serde::Deserialize)]
struct LexiconFile {
    categories: IndexMap<String, Vec<String>>,
}

impl RiskLexicon {
    /// Builds a lexicon from `(category, phrases)` pairs.
    pub fn new<C, P, S>(categories: C) -> Result<Self>
    where
        C: IntoIterator<Item = (S, P)>,
        P: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries = Vec::new();
        let mut names = Vec::new();
        let mut seen = HashSet::new();
        for (cat, phrases) in categories {
            let cat = cat.as_ref().trim().to_string();
            if cat.is_empty() || names.contains(&cat) {
                return Err(Error::Validation(format!("bad or duplicate category `{cat}`")));
            }
            let idx = names.len();
            let before = entries.len();
            for p in phrases {
                let tokens = tokenize(p.as_ref());
                if tokens.is_empty() {
                    return Err(Error::Validation(format!(
                        "phrase `{}` in `{cat}` has no tokens",
                        p.as_ref()
                    )));
                }
                let phrase = tokens.join(" ");
                if !seen.insert(phrase.clone()) {
                    return Err(Error::Validation(format!("duplicate phrase `{phrase}`")));
                }
                entries.push(LexiconEntry {
                    phrase,
                    tokens,
                    category: idx,
                });
            }
            if entries.len() == before {
                return Err(Error::Validation(format!("category `{cat}` is empty")));
            }
            names.push(cat);
        }
        let mut by_first_token: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_first_token.entry(e.tokens[0].clone()).or_default().push(i);
        }
        Ok(RiskLexicon {
            entries,
            categories: names,
            by_first_token,
        })
    }

    /// Reads `{"categories": {"<name>": ["phrase", ...]}}`.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: LexiconFile =
            serde_json::from_str(&raw).map_err(|e| Error::format(path, e.to_string()))?;
        Self::new(file.categories).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut cats: IndexMap<&str, Vec<&str>> =
            self.categories.iter().map(|c| (c.as_str(), Vec::new())).collect();
        for e in &self.entries {
            cats[e.category].push(&e.phrase);
        }
        serde_json::json!({ "categories": cats })
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn phrase_count(&self) -> usize {
        self.entries.len()
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    /// Every phrase occurrence in `tokens` as `(start, phrase index)`, ordered
    /// by position and then lexicon order. Overlapping matches all count.
    pub fn occurrences(&self, tokens: &[String]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (pos, tok) in tokens.iter().enumerate() {
            let Some(cands) = self.by_first_token.get(tok) else {
                continue;
            };
            for &i in cands {
                let pt = &self.entries[i].tokens;
                if tokens.len() - pos >= pt.len() && tokens[pos..pos + pt.len()] == pt[..] {
                    out.push((pos, i));
                }
            }
        }
        out
    }
}

fn contains_run(tokens: &[String], run: &[String]) -> bool {
    !run.is_empty() && tokens.windows(run.len()).any(|w| w == run)
}

/// Fraction of the corpus's days on which `phrase` occurs.
pub fn word_day_frequency(corpus: &UserCorpus, phrase: &str) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Domain(format!(
            "corpus of {} has no days",
            corpus.user_id
        )));
    }
    let run = tokenize(phrase);
    let hits = corpus
        .days
        .values()
        .filter(|msgs| msgs.iter().any(|m| contains_run(&tokenize(&m.text), &run)))
        .count();
    Ok(hits as f64 / corpus.day_count() as f64)
}

/// Per-day phrase presence for a whole corpus.
struct DayPresence {
    /// `days[d][i]` is true when phrase `i` occurs on day `d`.
    days: Vec<Vec<bool>>,
}

impl DayPresence {
    fn scan(corpus: &UserCorpus, lexicon: &RiskLexicon) -> Self {
        let days = corpus
            .days
            .values()
            .map(|msgs| {
                let mut present = vec![false; lexicon.phrase_count()];
                for m in msgs {
                    for (_, i) in lexicon.occurrences(&tokenize(&m.text)) {
                        present[i] = true;
                    }
                }
                present
            })
            .collect();
        DayPresence { days }
    }
}

/// One day-frequency per lexicon phrase, in lexicon order.
pub fn riskword_features(corpus: &UserCorpus, lexicon: &RiskLexicon) -> Vec<f64> {
    let presence = DayPresence::scan(corpus, lexicon);
    let n_days = presence.days.len();
    (0..lexicon.phrase_count())
        .map(|i| {
            if n_days == 0 {
                return 0.0;
            }
            presence.days.iter().filter(|d| d[i]).count() as f64 / n_days as f64
        })
        .collect()
}

/// One day-frequency per category: days on which any member phrase occurs.
pub fn riskcat_features(corpus: &UserCorpus, lexicon: &RiskLexicon) -> Vec<f64> {
    let presence = DayPresence::scan(corpus, lexicon);
    let n_days = presence.days.len();
    (0..lexicon.category_count())
        .map(|c| {
            if n_days == 0 {
                return 0.0;
            }
            let hits = presence
                .days
                .iter()
                .filter(|d| {
                    lexicon
                        .entries
                        .iter()
                        .enumerate()
                        .any(|(i, e)| e.category == c && d[i])
                })
                .count();
            hits as f64 / n_days as f64
        })
        .collect()
}

/// Messages carrying risk phrases, their weighted share, and the phrase stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskPartition<'a> {
    /// Risk messages in corpus order, not replicated.
    pub risk_messages: Vec<&'a Message>,
    /// Weighted risk messages over weighted total messages.
    pub risk_ratio: f64,
    /// Every phrase occurrence in corpus order, each message's occurrences
    /// repeated by its app weight.
    pub risk_word_stream: Vec<String>,
}

pub fn risk_message_partition<'a>(corpus: &'a UserCorpus, lexicon: &RiskLexicon) -> RiskPartition<'a> {
    let mut risk_messages = Vec::new();
    let mut stream = Vec::new();
    let mut risk_weight = 0u64;
    for m in corpus.messages() {
        let occ = lexicon.occurrences(&tokenize(&m.text));
        if occ.is_empty() {
            continue;
        }
        let w = corpus.weight(m.app);
        risk_weight += u64::from(w);
        risk_messages.push(m);
        for _ in 0..w {
            stream.extend(occ.iter().map(|&(_, i)| lexicon.entries[i].phrase.clone()));
        }
    }
    let total = corpus.weighted_message_count();
    let risk_ratio = if total == 0 {
        0.0
    } else {
        risk_weight as f64 / total as f64
    };
    RiskPartition {
        risk_messages,
        risk_ratio,
        risk_word_stream: stream,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Pattern {
    Word(String),
    /// Trailing-wildcard stem, stored without the `*`.
    Stem(String),
}

impl Pattern {
    pub fn parse(raw: &str) -> Result<Self> {
        let p = raw.trim();
        if p.is_empty() {
            return Err(Error::Validation("empty dictionary pattern".into()));
        }
        if p != p.to_lowercase() {
            return Err(Error::Validation(format!("pattern `{p}` must be lowercase")));
        }
        let (body, stem) = match p.strip_suffix('*') {
            Some(b) => (b, true),
            None => (p, false),
        };
        if body.is_empty() || body.contains('*') {
            return Err(Error::Validation(format!(
                "pattern `{p}`: wildcard allowed only in final position"
            )));
        }
        Ok(if stem {
            Pattern::Stem(body.to_string())
        } else {
            Pattern::Word(body.to_string())
        })
    }

    pub fn matches(&self, token: &str) -> bool {
        match self {
            Pattern::Word(w) => token == w,
            Pattern::Stem(s) => token.starts_with(s.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
struct CategoryPatterns {
    words: HashSet<String>,
    stems: Vec<String>,
    raw: Vec<String>,
}

impl CategoryPatterns {
    fn matches(&self, token: &str) -> bool {
        self.words.contains(token) || self.stems.iter().any(|s| token.starts_with(s.as_str()))
    }
}

/// Category → word/stem patterns, in file order.
#[derive(Debug, Clone)]
pub struct CategoryDictionary {
    names: Vec<String>,
    patterns: Vec<CategoryPatterns>,
}

impl CategoryDictionary {
    pub fn new<C, P, S>(categories: C) -> Result<Self>
    where
        C: IntoIterator<Item = (S, P)>,
        P: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut patterns = Vec::new();
        for (name, pats) in categories {
            let name = name.as_ref().trim().to_string();
            if name.is_empty() || names.contains(&name) {
                return Err(Error::Validation(format!("bad or duplicate category `{name}`")));
            }
            let mut cp = CategoryPatterns {
                words: HashSet::new(),
                stems: Vec::new(),
                raw: Vec::new(),
            };
            for p in pats {
                cp.raw.push(p.as_ref().trim().to_string());
                match Pattern::parse(p.as_ref())? {
                    Pattern::Word(w) => {
                        cp.words.insert(w);
                    }
                    Pattern::Stem(s) => cp.stems.push(s),
                }
            }
            names.push(name);
            patterns.push(cp);
        }
        Ok(CategoryDictionary { names, patterns })
    }

    /// Reads `{"<category>": ["word", "stem*", ...]}`.
    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map: IndexMap<String, Vec<String>> =
            serde_json::from_str(&raw).map_err(|e| Error::format(path, e.to_string()))?;
        Self::new(map).map_err(|e| Error::format(path, e.to_string()))
    }

    /// The `load` format, patterns in their original order.
    pub fn to_json(&self) -> serde_json::Value {
        let map: IndexMap<&str, &[String]> = self
            .names
            .iter()
            .zip(&self.patterns)
            .map(|(n, p)| (n.as_str(), p.raw.as_slice()))
            .collect();
        serde_json::json!(map)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Per-category share of `tokens` matching that category; zeros when empty.
    pub fn proportions(&self, tokens: &[String]) -> Vec<f64> {
        if tokens.is_empty() {
            return vec![0.0; self.len()];
        }
        self.patterns
            .iter()
            .map(|cp| {
                tokens.iter().filter(|t| cp.matches(t)).count() as f64 / tokens.len() as f64
            })
            .collect()
    }
}

/// App-weighted mean over messages of per-message category token proportions.
pub fn dict_category_features(corpus: &UserCorpus, dictionary: &CategoryDictionary) -> Vec<f64> {
    let mut sums = vec![0.0; dictionary.len()];
    let mut total_weight = 0.0;
    for m in corpus.messages() {
        let w = f64::from(corpus.weight(m.app));
        total_weight += w;
        for (s, p) in sums.iter_mut().zip(dictionary.proportions(&tokenize(&m.text))) {
            *s += w * p;
        }
    }
    if total_weight > 0.0 {
        for s in &mut sums {
            *s /= total_weight;
        }
    }
    sums
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, App, IngestConfig};
    use chrono::Duration;

    fn corpus(days: &[&[&str]]) -> UserCorpus {
        corpus_on(App::Tinder, days)
    }

    fn corpus_on(app: App, days: &[&[&str]]) -> UserCorpus {
        let base = parse_timestamp("2023-01-01T12:00:00Z").unwrap();
        let msgs = days.iter().enumerate().flat_map(|(d, texts)| {
            texts.iter().enumerate().map(move |(k, t)| {
                Message::new(
                    "u",
                    app,
                    base + Duration::days(d as i64) + Duration::seconds(k as i64),
                    *t,
                )
                .unwrap()
            })
        });
        UserCorpus::new("u", msgs, IngestConfig::default().weight_table()).unwrap()
    }

    fn lexicon() -> RiskLexicon {
        RiskLexicon::new([
            ("drugs", vec!["meth", "crystal meth", "tina"]),
            ("party", vec!["party", "pnp"]),
        ])
        .unwrap()
    }

    #[test]
    fn phrase_every_day_is_one() {
        let days: Vec<&[&str]> = vec![&["party time"]; 7];
        assert_eq!(word_day_frequency(&corpus(&days), "party").unwrap(), 1.0);
    }

    #[test]
    fn phrase_on_two_of_four_days() {
        let c = corpus(&[&["party"], &["nothing"], &["PARTY!"], &["quiet"]]);
        assert_eq!(word_day_frequency(&c, "party").unwrap(), 0.5);
        assert_eq!(word_day_frequency(&c, "absent").unwrap(), 0.0);
    }

    #[test]
    fn whole_token_matching_only() {
        let c = corpus(&[&["partying all night"]]);
        assert_eq!(word_day_frequency(&c, "party").unwrap(), 0.0);
    }

    #[test]
    fn empty_corpus_is_domain_error() {
        let c = UserCorpus::new("u", Vec::new(), Default::default()).unwrap();
        assert!(matches!(word_day_frequency(&c, "x"), Err(Error::Domain(_))));
    }

    #[test]
    fn riskwords_zero_and_unit_vectors() {
        let lex = lexicon();
        assert_eq!(riskword_features(&corpus(&[&["hello there"]]), &lex), vec![0.0; 5]);
        assert_eq!(
            riskword_features(&corpus(&[&["lets pnp"]]), &lex),
            vec![0.0, 0.0, 0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn riskwords_ignore_app_weight() {
        let lex = lexicon();
        let days: &[&[&str]] = &[&["meth"], &["no"], &["party"]];
        assert_eq!(
            riskword_features(&corpus_on(App::Grindr, days), &lex),
            riskword_features(&corpus_on(App::Tinder, days), &lex)
        );
    }

    #[test]
    fn multi_token_phrase_overlaps_single() {
        let lex = lexicon();
        let v = riskword_features(&corpus(&[&["some crystal meth"], &["meth"]]), &lex);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[1], 0.5);
    }

    #[test]
    fn category_is_union_of_member_days() {
        let lex = lexicon();
        let c = corpus(&[&["party"], &["pnp"], &["x"], &["y"]]);
        assert_eq!(riskcat_features(&c, &lex), vec![0.0, 0.5]);
        let c = corpus(&[&["tina"], &["x"]]);
        let rw = riskword_features(&c, &lex);
        assert_eq!(riskcat_features(&c, &lex)[0], rw[2]);
    }

    #[test]
    fn dictionary_proportion_example() {
        let dict = CategoryDictionary::new([("swear", vec!["damn"])]).unwrap();
        let v = dict_category_features(&corpus(&[&["damn damn fine"]]), &dict);
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tokenless_message_contributes_zero() {
        let dict = CategoryDictionary::new([("swear", vec!["damn"])]).unwrap();
        let v = dict_category_features(&corpus(&[&["damn", "!!!"]]), &dict);
        assert_eq!(v[0], 0.5);
    }

    #[test]
    fn stem_pattern_matches_prefix() {
        let p = Pattern::parse("drink*").unwrap();
        assert!(p.matches("drinking"));
        assert!(p.matches("drink"));
        assert!(!p.matches("redrink"));
        assert!(Pattern::parse("dr*nk").is_err());
        assert!(Pattern::parse("Drink").is_err());
        assert!(Pattern::parse("*").is_err());
    }

    #[test]
    fn dictionary_weighted_by_app() {
        let dict = CategoryDictionary::new([("swear", vec!["damn"])]).unwrap();
        let base = parse_timestamp("2023-01-01T12:00:00Z").unwrap();
        let msgs = vec![
            Message::new("u", App::Grindr, base, "damn").unwrap(),
            Message::new("u", App::Tinder, base + Duration::seconds(1), "fine").unwrap(),
        ];
        let c = UserCorpus::new("u", msgs, IngestConfig::default().weight_table()).unwrap();
        // grindr weight 2: (2·1 + 1·0) / 3
        assert!((dict_category_features(&c, &dict)[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn partition_without_risk_words() {
        let c = corpus(&[&["hello", "world"]]);
        let p = risk_message_partition(&c, &lexicon());
        assert!(p.risk_messages.is_empty());
        assert_eq!(p.risk_ratio, 0.0);
        assert!(p.risk_word_stream.is_empty());
    }

    #[test]
    fn partition_ratio_two_of_ten() {
        let mut texts = vec!["plain"; 8];
        texts.push("meth");
        texts.push("party");
        let c = corpus(&[&texts]);
        let p = risk_message_partition(&c, &lexicon());
        assert_eq!(p.risk_messages.len(), 2);
        assert!((p.risk_ratio - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stream_counts_occurrences_and_replicates() {
        let lex = lexicon();
        let c = corpus(&[&["meth party meth"]]);
        let p = risk_message_partition(&c, &lex);
        assert_eq!(p.risk_word_stream, vec!["meth", "party", "meth"]);
        let c = corpus_on(App::Grindr, &[&["tina"]]);
        let p = risk_message_partition(&c, &lex);
        assert_eq!(p.risk_word_stream, vec!["tina", "tina"]);
        assert_eq!(p.risk_ratio, 1.0);
    }

    #[test]
    fn lexicon_validation() {
        assert!(RiskLexicon::new([("a", vec!["x"]), ("b", vec!["X"])]).is_err());
        assert!(RiskLexicon::new([("a", Vec::<&str>::new())]).is_err());
        assert!(RiskLexicon::new([("a", vec!["!!"])]).is_err());
    }

    #[test]
    fn lexicon_file_order_preserved() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.json");
        fs::write(&p, r#"{"categories":{"zeta":["zz","aa"],"alpha":["mm"]}}"#).unwrap();
        let lex = RiskLexicon::load(&p).unwrap();
        let phrases: Vec<&str> = lex.entries().iter().map(|e| e.phrase.as_str()).collect();
        assert_eq!(phrases, vec!["zz", "aa", "mm"]);
        assert_eq!(lex.categories(), ["zeta", "alpha"]);
        let again = RiskLexicon::new(
            serde_json::from_value::<LexiconFile>(lex.to_json()).unwrap().categories,
        )
        .unwrap();
        assert_eq!(again.entries(), lex.entries());
    }
}
