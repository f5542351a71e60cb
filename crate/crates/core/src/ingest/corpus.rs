use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::message::{App, Message};
use crate::error::{Error, Result};

fn default_retention_days() -> u32 {
    183
}
fn default_min_days() -> u32 {
    30
}
fn default_min_messages() -> u32 {
    1000
}
fn default_excluded_apps() -> BTreeSet<App> {
    BTreeSet::from([App::Facebook])
}
fn default_app_weights() -> BTreeMap<App, u32> {
    BTreeMap::from([(App::Grindr, 2)])
}

/// Population filter and weighting rules applied by [`build_corpora`].
///
/// Apps missing from `app_weights` get weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    #[serde(default = "default_retention_days")]
    pub retention_days: u32,
    #[serde(default = "default_min_days")]
    pub min_days: u32,
    #[serde(default = "default_min_messages")]
    pub min_messages: u32,
    #[serde(default = "default_excluded_apps")]
    pub excluded_apps: BTreeSet<App>,
    #[serde(default = "default_app_weights")]
    pub app_weights: BTreeMap<App, u32>,
    /// Anchor of the retention window; each user's latest message date when unset.
    #[serde(default)]
    pub reference_date: Option<NaiveDate>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            retention_days: default_retention_days(),
            min_days: default_min_days(),
            min_messages: default_min_messages(),
            excluded_apps: default_excluded_apps(),
            app_weights: default_app_weights(),
            reference_date: None,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.retention_days == 0 || self.min_days == 0 || self.min_messages == 0 {
            return Err(Error::Config(
                "retention_days, min_days and min_messages must be positive".into(),
            ));
        }
        if let Some((app, _)) = self.app_weights.iter().find(|(_, w)| **w == 0) {
            return Err(Error::Config(format!("app weight for {app} must be >= 1")));
        }
        Ok(())
    }

    pub fn weight(&self, app: App) -> u32 {
        self.app_weights.get(&app).copied().unwrap_or(1)
    }

    /// Full weight table over every app.
    pub fn weight_table(&self) -> BTreeMap<App, u32> {
        App::ALL.into_iter().map(|a| (a, self.weight(a))).collect()
    }
}

/// One user's messages grouped by UTC calendar date.
///
/// Within a day messages are ordered by `sent_at`, ties kept in input order.
/// `weights` holds the per-app replication factor applied at feature time.
#[derive(Debug, Clone, PartialEq)]
pub struct UserCorpus {
    pub user_id: String,
    pub days: BTreeMap<NaiveDate, Vec<Message>>,
    pub weights: BTreeMap<App, u32>,
}

impl UserCorpus {
    /// Groups `messages` by date. Fails if any message belongs to another user.
    pub fn new(
        user_id: impl Into<String>,
        messages: impl IntoIterator<Item = Message>,
        weights: BTreeMap<App, u32>,
    ) -> Result<Self> {
        let user_id = user_id.into();
        let mut days: BTreeMap<NaiveDate, Vec<Message>> = BTreeMap::new();
        for m in messages {
            if m.user_id != user_id {
                return Err(Error::Validation(format!(
                    "message from user {} in corpus of {}",
                    m.user_id, user_id
                )));
            }
            days.entry(m.date()).or_default().push(m);
        }
        for msgs in days.values_mut() {
            msgs.sort_by_key(|m| m.sent_at);
        }
        Ok(UserCorpus {
            user_id,
            days,
            weights,
        })
    }

    pub fn day_count(&self) -> usize {
        self.days.len()
    }

    /// Raw message count, before weighting.
    pub fn message_count(&self) -> usize {
        self.days.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn weight(&self, app: App) -> u32 {
        self.weights.get(&app).copied().unwrap_or(1)
    }

    /// Messages in corpus order (date, then time).
    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.days.values().flatten()
    }

    /// Messages in corpus order with each repeated by its app weight.
    pub fn replicated_messages(&self) -> impl Iterator<Item = &Message> {
        self.messages()
            .flat_map(|m| std::iter::repeat_n(m, self.weight(m.app) as usize))
    }

    pub fn weighted_message_count(&self) -> u64 {
        self.messages().map(|m| u64::from(self.weight(m.app))).sum()
    }
}

/// Keeps the first message for each `(user_id, sent_at, text)` key, in input order.
pub fn deduplicate(messages: Vec<Message>) -> Vec<Message> {
    let mut seen = HashSet::with_capacity(messages.len());
    messages
        .into_iter()
        .filter(|m| seen.insert((m.user_id.clone(), m.sent_at, m.text.clone())))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoMessages,
    MinDays,
    MinMessages,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::NoMessages => "no_messages",
            ExclusionReason::MinDays => "min_days",
            ExclusionReason::MinMessages => "min_messages",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub user_id: String,
    pub reason: ExclusionReason,
    pub detail: String,
}

/// Users dropped by [`build_corpora`], one entry per user, sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionReport {
    pub entries: Vec<Exclusion>,
}

impl ExclusionReport {
    pub fn reason_for(&self, user_id: &str) -> Option<ExclusionReason> {
        self.entries
            .iter()
            .find(|e| e.user_id == user_id)
            .map(|e| e.reason)
    }

    /// Writes `user_id,reason,detail`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let io = |e: csv::Error| Error::format(path, e.to_string());
        w.write_record(["user_id", "reason", "detail"]).map_err(io)?;
        for e in &self.entries {
            w.write_record([e.user_id.as_str(), e.reason.as_str(), e.detail.as_str()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Applies app exclusion, the retention window and eligibility thresholds.
///
/// Expects deduplicated input.
pub fn build_corpora(
    messages: &[Message],
    cfg: &IngestConfig,
) -> (BTreeMap<String, UserCorpus>, ExclusionReport) {
    let mut by_user: BTreeMap<&str, Vec<&Message>> = BTreeMap::new();
    for m in messages {
        by_user.entry(m.user_id.as_str()).or_default().push(m);
    }
    let weights = cfg.weight_table();
    let mut corpora = BTreeMap::new();
    let mut report = ExclusionReport::default();

    for (user, msgs) in by_user {
        let kept: Vec<&Message> = msgs
            .into_iter()
            .filter(|m| !cfg.excluded_apps.contains(&m.app))
            .collect();
        let anchor = cfg
            .reference_date
            .or_else(|| kept.iter().map(|m| m.date()).max());
        let windowed: Vec<Message> = match anchor {
            Some(anchor) => {
                let earliest = anchor - Duration::days(i64::from(cfg.retention_days));
                kept.into_iter()
                    .filter(|m| (earliest..=anchor).contains(&m.date()))
                    .cloned()
                    .collect()
            }
            None => Vec::new(),
        };
        let total = windowed.len();
        let corpus = UserCorpus::new(user, windowed, weights.clone())
            .expect("messages grouped by user id");
        let days = corpus.day_count();

        let failure = if total == 0 {
            Some((
                ExclusionReason::NoMessages,
                "0 messages remaining after app and window filters".to_string(),
            ))
        } else if days < cfg.min_days as usize {
            Some((
                ExclusionReason::MinDays,
                format!("{days} days < {}; {total} messages", cfg.min_days),
            ))
        } else if total < cfg.min_messages as usize {
            Some((
                ExclusionReason::MinMessages,
                format!("{total} messages < {}; {days} days", cfg.min_messages),
            ))
        } else {
            None
        };
        match failure {
            Some((reason, detail)) => report.entries.push(Exclusion {
                user_id: user.to_string(),
                reason,
                detail,
            }),
            None => {
                corpora.insert(user.to_string(), corpus);
            }
        }
    }
    (corpora, report)
}
