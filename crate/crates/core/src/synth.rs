//! Synthetic corpora whose latent labels drive risk-phrase emission and
//! survey answers, written in the same export formats ingest reads.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::App;
use crate::labels::{write_labels_csv, write_survey_csv, LabelSet, LabelValue, Outcome, QuestionId, SurveyResponse};
use crate::lexfeat::{CategoryDictionary, RiskLexicon};
use crate::seed;

/// Prior probability of each latent label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prevalence {
    pub binge_monthly: f64,
    pub auditc_high: f64,
    pub over5_partners: f64,
    pub takes_prep: f64,
}

impl Default for Prevalence {
    fn default() -> Self {
        Prevalence {
            binge_monthly: 0.47,
            auditc_high: 0.35,
            over5_partners: 0.52,
            takes_prep: 0.57,
        }
    }
}

impl Prevalence {
    pub fn get(&self, o: Outcome) -> f64 {
        match o {
            Outcome::BingeMonthly => self.binge_monthly,
            Outcome::AuditcHigh => self.auditc_high,
            Outcome::Over5Partners => self.over5_partners,
            Outcome::TakesPrep => self.takes_prep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub min_days: usize,
    pub max_days: usize,
    pub min_messages_per_day: usize,
    pub max_messages_per_day: usize,
    /// Per-message probability of a phrase from a label's category when the
    /// user is latent-positive for that label.
    pub positive_rate: f64,
    pub negative_rate: f64,
    /// Per-message rate of the label-independent categories.
    pub background_rate: f64,
    /// Probability that a survey answer reports the flipped latent label.
    pub label_noise: f64,
    /// Probability of "Decline to answer" on questions that offer it.
    pub decline_rate: f64,
    pub prevalence: Prevalence,
    /// Labels whose latent value changes emission. The rest are controls.
    pub signal_labels: Vec<Outcome>,
    pub end_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 160,
            min_days: 45,
            max_days: 75,
            min_messages_per_day: 25,
            max_messages_per_day: 40,
            positive_rate: 0.03,
            negative_rate: 0.01,
            background_rate: 0.01,
            label_noise: 0.05,
            decline_rate: 0.0,
            prevalence: Prevalence::default(),
            signal_labels: vec![Outcome::BingeMonthly, Outcome::TakesPrep],
            end_date: NaiveDate::from_ymd_opt(2023, 6, 30).expect("valid date"),
            seed: 0,
        }
    }
}

/// Span of calendar days active users are spread over, ending at `end_date`.
const ACTIVE_SPAN_DAYS: i64 = 150;

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        unit("positive_rate", self.positive_rate)?;
        unit("negative_rate", self.negative_rate)?;
        unit("background_rate", self.background_rate)?;
        unit("label_noise", self.label_noise)?;
        unit("decline_rate", self.decline_rate)?;
        for o in Outcome::ALL {
            unit(o.as_str(), self.prevalence.get(o))?;
        }
        if self.positive_rate < self.negative_rate {
            return Err(Error::Config("positive_rate must not be below negative_rate".into()));
        }
        if self.n_users == 0 {
            return Err(Error::Config("n_users must be positive".into()));
        }
        if self.min_days == 0 || self.min_days > self.max_days || self.max_days as i64 > ACTIVE_SPAN_DAYS {
            return Err(Error::Config(format!(
                "need 1 <= min_days <= max_days <= {ACTIVE_SPAN_DAYS}"
            )));
        }
        if self.min_messages_per_day == 0 || self.min_messages_per_day > self.max_messages_per_day {
            return Err(Error::Config("need 1 <= min_messages_per_day <= max_messages_per_day".into()));
        }
        Ok(())
    }
}

/// Risk category each label's signal is emitted through.
pub fn signal_category(o: Outcome) -> &'static str {
    match o {
        Outcome::BingeMonthly | Outcome::AuditcHigh => "alcohol",
        Outcome::Over5Partners => "sex",
        Outcome::TakesPrep => "prep",
    }
}

const BACKGROUND_CATEGORIES: [&str; 2] = ["drugs", "party"];

pub fn synthetic_lexicon() -> RiskLexicon {
    RiskLexicon::new([
        ("alcohol", vec!["beer", "vodka", "wasted", "shots", "hangover", "tequila", "drunk", "open bar"]),
        ("sex", vec!["hookup", "bareback", "nsa", "hung", "raw", "fwb", "dtf", "no strings"]),
        ("prep", vec!["prep", "truvada", "descovy", "undetectable", "std test", "clinic"]),
        ("drugs", vec!["tina", "molly", "chems", "party and play", "coke", "ketamine"]),
        ("party", vec!["club", "rave", "circuit party", "afterhours", "dance floor"]),
    ])
    .expect("built-in lexicon is valid")
}

pub fn synthetic_dictionary() -> CategoryDictionary {
    CategoryDictionary::new([
        ("i", vec!["i", "me", "my", "mine", "myself"]),
        ("we", vec!["we", "us", "our"]),
        ("you", vec!["you", "your", "ya"]),
        ("posemo", vec!["happy", "love*", "nice", "great", "fun", "good", "awesome"]),
        ("negemo", vec!["sad", "hate*", "angry", "bad", "tired", "ugh"]),
        ("social", vec!["friend*", "guy*", "date", "talk*", "meet*", "chat"]),
        ("time", vec!["today", "tonight", "tomorrow", "week*", "now", "later"]),
        ("leisure", vec!["movie*", "music", "game*", "gym", "beach", "show"]),
        ("work", vec!["work*", "job", "office", "boss", "meeting"]),
    ])
    .expect("built-in dictionary is valid")
}

const FILLER: &[&str] = &[
    "i", "me", "my", "we", "us", "you", "your", "ya", "happy", "love", "lovely", "nice", "great", "fun",
    "good", "awesome", "sad", "hate", "angry", "bad", "tired", "ugh", "friend", "friends", "guys", "date",
    "talk", "talking", "meet", "meeting", "chat", "today", "tonight", "tomorrow", "weekend", "now",
    "later", "movie", "movies", "music", "games", "gym", "beach", "show", "work", "working", "job",
    "office", "boss", "the", "a", "an", "and", "or", "but", "so", "to", "of", "in", "on", "at", "for",
    "with", "is", "are", "was", "be", "have", "has", "do", "did", "going", "get", "got", "want", "think",
    "know", "see", "come", "back", "home", "place", "city", "downtown", "coffee", "dinner", "lunch",
    "food", "pizza", "tacos", "dog", "cat", "car", "bus", "train", "weather", "rain", "sun", "hot",
    "cold", "cute", "funny", "lol", "haha", "omg", "yeah", "yes", "no", "maybe", "sure", "ok", "okay",
    "hey", "hi", "hello", "sup", "thanks", "sorry", "please", "what", "where", "when", "how", "why",
    "who", "pic", "photo", "text", "call", "soon", "late", "early", "night", "morning", "afternoon",
    "really", "very", "just", "still", "again", "also", "too", "here", "there", "this", "that", "it",
];

const APP_SHARES: [(App, f64); 7] = [
    (App::Grindr, 0.35),
    (App::Tinder, 0.15),
    (App::Instagram, 0.15),
    (App::Snapchat, 0.10),
    (App::Twitter, 0.08),
    (App::Reddit, 0.07),
    (App::Facebook, 0.10),
];

/// Rows that ingest should discard.
const RECEIVED_RATE: f64 = 0.03;
const DUPLICATE_RATE: f64 = 0.01;
const STALE_MESSAGES: usize = 3;
const STALE_AGE_DAYS: i64 = 200;

#[derive(Debug, Clone)]
struct Row {
    user: String,
    epoch: i64,
    text: String,
    sent: bool,
}

/// Files written by [`generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub exports_dir: PathBuf,
    pub survey: PathBuf,
    pub lexicon: PathBuf,
    pub dictionary: PathBuf,
    pub latent_labels: PathBuf,
    pub users: usize,
    pub rows_written: usize,
}

pub fn user_id(i: usize) -> String {
    format!("u{:03}", i + 1)
}

/// Writes exports, survey, lexicon, dictionary and latent labels under `dir`.
pub fn generate(config: &SynthConfig, dir: &Path) -> Result<SynthOutput> {
    config.validate()?;
    let exports_dir = dir.join("exports");
    fs::create_dir_all(&exports_dir).map_err(|e| Error::io(&exports_dir, e))?;

    let lexicon = synthetic_lexicon();
    let phrases = phrases_by_category(&lexicon);
    let mut rows: BTreeMap<App, Vec<Row>> = BTreeMap::new();
    let mut notes = Vec::new();
    let mut survey = Vec::new();
    let mut latent_sets = Vec::new();

    for i in 0..config.n_users {
        let user = user_id(i);
        let mut rng = seed::rng(config.seed, &format!("synth/{user}"));
        let latent: BTreeMap<Outcome, bool> = Outcome::ALL
            .into_iter()
            .map(|o| (o, rng.random_bool(config.prevalence.get(o))))
            .collect();
        let observed: BTreeMap<Outcome, bool> = latent
            .iter()
            .map(|(&o, &v)| (o, v ^ rng.random_bool(config.label_noise)))
            .collect();

        let mut rates: Vec<(&str, f64)> = BACKGROUND_CATEGORIES
            .iter()
            .map(|&c| (c, config.background_rate))
            .collect();
        for cat in ["alcohol", "sex", "prep"] {
            let positive = config
                .signal_labels
                .iter()
                .any(|&o| signal_category(o) == cat && latent[&o]);
            let r = if positive { config.positive_rate } else { config.negative_rate };
            rates.push((cat, r));
        }

        user_messages(config, &user, &rates, &phrases, &mut rng, &mut rows);
        notes.push(Row {
            user: user.clone(),
            epoch: day_epoch(config.end_date, rng.random_range(0..ACTIVE_SPAN_DAYS)),
            text: format!("profile {}", random_text(&mut rng, &[], &phrases)),
            sent: true,
        });
        survey.extend(survey_answers(&user, &observed, config.decline_rate, &mut rng)?);
        latent_sets.push(LabelSet {
            user_id: user.clone(),
            binge_monthly: LabelValue::from_bool(latent[&Outcome::BingeMonthly]),
            auditc_high: LabelValue::from_bool(latent[&Outcome::AuditcHigh]),
            over5_partners: LabelValue::from_bool(latent[&Outcome::Over5Partners]),
            takes_prep: LabelValue::from_bool(latent[&Outcome::TakesPrep]),
        });
    }

    let mut rows_written = notes.len();
    write_notes_csv(&exports_dir.join("grindr_profile_note_export.csv"), &notes)?;
    for (app, app_rows) in &rows {
        rows_written += app_rows.len();
        write_app_export(&exports_dir, *app, app_rows)?;
    }

    let out = SynthOutput {
        survey: dir.join("survey.csv"),
        lexicon: dir.join("lexicon.json"),
        dictionary: dir.join("dictionary.json"),
        latent_labels: dir.join("latent_labels.csv"),
        exports_dir,
        users: config.n_users,
        rows_written,
    };
    write_survey_csv(&out.survey, &survey)?;
    write_labels_csv(&out.latent_labels, &latent_sets)?;
    write_json(&out.lexicon, &lexicon.to_json())?;
    write_json(&out.dictionary, &synthetic_dictionary().to_json())?;
    Ok(out)
}

fn phrases_by_category(lexicon: &RiskLexicon) -> BTreeMap<String, Vec<String>> {
    let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for e in lexicon.entries() {
        m.entry(lexicon.categories()[e.category].clone())
            .or_default()
            .push(e.phrase.clone());
    }
    m
}

fn day_epoch(end: NaiveDate, days_back: i64) -> i64 {
    let date = end - Duration::days(days_back);
    Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).expect("midnight"))
        .timestamp()
}

fn random_text(rng: &mut ChaCha8Rng, rates: &[(&str, f64)], phrases: &BTreeMap<String, Vec<String>>) -> String {
    let n = rng.random_range(3..=12);
    let mut words: Vec<String> = (0..n)
        .map(|_| FILLER.choose(rng).expect("filler").to_string())
        .collect();
    for &(cat, rate) in rates {
        if rng.random_bool(rate) {
            let phrase = phrases[cat].choose(rng).expect("category phrases").clone();
            let at = rng.random_range(0..=words.len());
            words.insert(at, phrase);
        }
    }
    words.join(" ")
}

fn user_messages(
    config: &SynthConfig,
    user: &str,
    rates: &[(&str, f64)],
    phrases: &BTreeMap<String, Vec<String>>,
    rng: &mut ChaCha8Rng,
    rows: &mut BTreeMap<App, Vec<Row>>,
) {
    let n_days = rng.random_range(config.min_days..=config.max_days);
    let mut offsets: Vec<i64> = (0..ACTIVE_SPAN_DAYS).collect();
    offsets.shuffle(rng);
    offsets.truncate(n_days);
    offsets.sort_unstable();
    let weights: Vec<f64> = APP_SHARES.iter().map(|(_, w)| *w).collect();
    let pick_app = |rng: &mut ChaCha8Rng| {
        let mut u = rng.random::<f64>() * weights.iter().sum::<f64>();
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return APP_SHARES[i].0;
            }
            u -= w;
        }
        APP_SHARES[APP_SHARES.len() - 1].0
    };

    let mut push = |rng: &mut ChaCha8Rng, epoch: i64, text: String, sent: bool| {
        let row = Row {
            user: user.to_string(),
            epoch,
            text,
            sent,
        };
        let app = pick_app(rng);
        let dup = rng.random_bool(DUPLICATE_RATE);
        let list = rows.entry(app).or_default();
        if dup {
            list.push(row.clone());
        }
        list.push(row);
    };

    for &back in &offsets {
        let base = day_epoch(config.end_date, back);
        let count = rng.random_range(config.min_messages_per_day..=config.max_messages_per_day);
        for _ in 0..count {
            let epoch = base + rng.random_range(0..86_400);
            let text = random_text(rng, rates, phrases);
            push(rng, epoch, text, true);
            if rng.random_bool(RECEIVED_RATE) {
                let reply = random_text(rng, &[], phrases);
                push(rng, epoch + 30, reply, false);
            }
        }
    }
    for _ in 0..STALE_MESSAGES {
        let epoch = day_epoch(config.end_date, STALE_AGE_DAYS + rng.random_range(0..30));
        let text = random_text(rng, rates, phrases);
        push(rng, epoch, text, true);
    }
}

/// Survey answers consistent with the observed labels.
fn survey_answers(
    user: &str,
    observed: &BTreeMap<Outcome, bool>,
    decline_rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SurveyResponse>> {
    let q3: u8 = if observed[&Outcome::BingeMonthly] {
        rng.random_range(3..=5)
    } else {
        rng.random_range(1..=2)
    };
    let (q1, q2) = loop {
        let (a, b): (u8, u8) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let score = (a - 1) + (b - 1) + (q3 - 1);
        if (score >= crate::labels::AUDIT_C_HIGH_THRESHOLD) == observed[&Outcome::AuditcHigh] {
            break (a, b);
        }
    };
    let mut out = Vec::with_capacity(QuestionId::ALL.len());
    for q in QuestionId::ALL {
        let n = q.options().len() as u8;
        let decline = (1..=n).find(|&i| q.is_non_answer(i));
        let answer = match (decline, rng.random_bool(decline_rate)) {
            (Some(d), true) => d,
            _ => match q {
                QuestionId::AuditcQ1 => q1,
                QuestionId::AuditcQ2 => q2,
                QuestionId::AuditcQ3 => q3,
                QuestionId::TakesPrep => {
                    if observed[&Outcome::TakesPrep] {
                        1
                    } else {
                        2
                    }
                }
                QuestionId::Partners3mo => {
                    if observed[&Outcome::Over5Partners] {
                        rng.random_range(1..=2)
                    } else {
                        rng.random_range(3..=4)
                    }
                }
                _ => {
                    let answers: Vec<u8> = (1..=n).filter(|&i| !q.is_non_answer(i)).collect();
                    *answers.choose(rng).expect("question has answers")
                }
            },
        };
        out.push(SurveyResponse::new(user, q, answer)?);
    }
    Ok(out)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn rfc3339(epoch: i64) -> String {
    crate::ingest::format_timestamp(&Utc.timestamp_opt(epoch, 0).single().expect("valid epoch"))
}

fn naive(epoch: i64) -> String {
    Utc.timestamp_opt(epoch, 0)
        .single()
        .expect("valid epoch")
        .format("%Y-%m-%d %H:%M:%S")
        .to_string()
}

fn direction(sent: bool) -> &'static str {
    if sent {
        "sent"
    } else {
        "received"
    }
}

fn write_csv(path: &Path, header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let err = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(header).map_err(err)?;
    for r in records {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_notes_csv(path: &Path, notes: &[Row]) -> Result<()> {
    write_csv(
        path,
        &["user_id", "timestamp", "text"],
        notes
            .iter()
            .map(|r| vec![r.user.clone(), rfc3339(r.epoch), r.text.clone()]),
    )
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One file per app; the format varies by app the way real exports do.
fn write_app_export(dir: &Path, app: App, rows: &[Row]) -> Result<()> {
    match app {
        App::Grindr => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "sender_id": r.user,
                        "created_at": r.epoch,
                        "content": r.text,
                        "direction": direction(r.sent),
                    })
                })
                .collect();
            write_json(
                &dir.join("grindr_export.json"),
                &serde_json::json!({ "messages": items }),
            )
        }
        App::Snapchat => {
            let items: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "user_id": r.user,
                        "timestamp": rfc3339(r.epoch),
                        "text": r.text,
                        "direction": direction(r.sent),
                    })
                })
                .collect();
            write_json(&dir.join("snapchat_export.json"), &serde_json::Value::Array(items))
        }
        App::Instagram => {
            let mut html = String::from(
                "<html><body><h1>Messages</h1>\n<table>\n<tr><th>User</th><th>Date</th><th>Message</th><th>Direction</th></tr>\n",
            );
            for r in rows {
                html.push_str(&format!(
                    "<tr><td>{}</td><td>{}</td><td>{}</td><td>{}</td></tr>\n",
                    html_escape(&r.user),
                    naive(r.epoch),
                    html_escape(&r.text),
                    direction(r.sent)
                ));
            }
            html.push_str("</table>\n</body></html>\n");
            let path = dir.join("instagram_export.html");
            fs::write(&path, html).map_err(|e| Error::io(&path, e))
        }
        _ => write_csv(
            &dir.join(format!("{}_export.csv", app.as_str())),
            &["user_id", "sent_at", "message", "direction"],
            rows.iter().map(|r| {
                vec![
                    r.user.clone(),
                    rfc3339(r.epoch),
                    r.text.clone(),
                    direction(r.sent).to_string(),
                ]
            }),
        ),
    }
}
