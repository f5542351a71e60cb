use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source application of a message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum App {
    Grindr,
    GrindrProfileNote,
    Tinder,
    Instagram,
    Snapchat,
    Twitter,
    Reddit,
    Facebook,
}

impl App {
    pub const ALL: [App; 8] = [
        App::Grindr,
        App::GrindrProfileNote,
        App::Tinder,
        App::Instagram,
        App::Snapchat,
        App::Twitter,
        App::Reddit,
        App::Facebook,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            App::Grindr => "grindr",
            App::GrindrProfileNote => "grindr_profile_note",
            App::Tinder => "tinder",
            App::Instagram => "instagram",
            App::Snapchat => "snapchat",
            App::Twitter => "twitter",
            App::Reddit => "reddit",
            App::Facebook => "facebook",
        }
    }
}

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for App {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        App::ALL
            .into_iter()
            .find(|a| a.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown app `{s}`")))
    }
}

/// One message sent by a study participant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub user_id: String,
    pub app: App,
    pub sent_at: DateTime<Utc>,
    pub text: String,
}

impl Message {
    /// Builds a message, rejecting text that is empty after trimming.
    /// Sub-second precision is dropped.
    pub fn new(
        user_id: impl Into<String>,
        app: App,
        sent_at: DateTime<Utc>,
        text: impl Into<String>,
    ) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Validation("message text is empty".into()));
        }
        let sent_at = Utc
            .timestamp_opt(sent_at.timestamp(), 0)
            .single()
            .ok_or_else(|| Error::Validation("timestamp out of range".into()))?;
        Ok(Message {
            user_id: user_id.into(),
            app,
            sent_at,
            text,
        })
    }

    /// UTC calendar date used for day grouping.
    pub fn date(&self) -> NaiveDate {
        self.sent_at.date_naive()
    }
}

/// Canonical timestamp rendering, `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses the timestamp shapes seen in app exports and normalizes to UTC.
///
/// Accepted: RFC 3339 with any offset, `YYYY-MM-DD[T ]HH:MM:SS[.fff]` (read
/// as UTC), and integer Unix epochs in seconds or milliseconds.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let s = raw.trim();
    if s.is_empty() {
        return None;
    }
    let parsed = if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        Some(dt.with_timezone(&Utc))
    } else if let Ok(epoch) = s.parse::<i64>() {
        // Anything past year ~5138 in seconds is taken as milliseconds.
        let secs = if epoch.abs() >= 100_000_000_000 {
            epoch.div_euclid(1000)
        } else {
            epoch
        };
        Utc.timestamp_opt(secs, 0).single()
    } else {
        ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .map(|naive| naive.and_utc())
    }?;
    Utc.timestamp_opt(parsed.timestamp(), 0).single()
}
