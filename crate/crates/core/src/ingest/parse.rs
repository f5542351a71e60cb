//! Export-file adapters and the canonical message CSV.
//!
//! Every adapter reduces its input to a sequence of raw records with the same
//! four logical columns (user, timestamp, text, direction) and then runs the
//! shared conversion, so drop accounting is identical across formats.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::message::{format_timestamp, parse_timestamp, App, Message};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    JsonRecords,
    HtmlTable,
}

impl ExportFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Csv => "csv",
            ExportFormat::JsonRecords => "json_records",
            ExportFormat::HtmlTable => "html_table",
        }
    }

    /// Guesses the format from a file extension (`csv`, `json`, `html`/`htm`).
    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "csv" => Some(ExportFormat::Csv),
            "json" => Some(ExportFormat::JsonRecords),
            "html" | "htm" => Some(ExportFormat::HtmlTable),
            _ => None,
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(ExportFormat::Csv),
            "json_records" => Ok(ExportFormat::JsonRecords),
            "html_table" => Ok(ExportFormat::HtmlTable),
            other => Err(Error::Config(format!("unknown export format `{other}`"))),
        }
    }
}

/// Per-reason counts of records that did not become messages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropCounts {
    pub received: usize,
    pub empty_text: usize,
    pub bad_timestamp: usize,
    pub malformed: usize,
}

impl DropCounts {
    pub fn total(&self) -> usize {
        self.received + self.empty_text + self.bad_timestamp + self.malformed
    }

    pub fn add(&mut self, other: &DropCounts) {
        self.received += other.received;
        self.empty_text += other.empty_text;
        self.bad_timestamp += other.bad_timestamp;
        self.malformed += other.malformed;
    }
}

/// Result of parsing one file. `rows_read == messages.len() + dropped.total()`.
#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub messages: Vec<Message>,
    pub rows_read: usize,
    pub dropped: DropCounts,
}

#[derive(Debug, Default)]
struct RawRecord {
    user_id: Option<String>,
    timestamp: Option<String>,
    text: Option<String>,
    direction: Option<String>,
    malformed: bool,
}

#[derive(Clone, Copy)]
enum Column {
    User,
    Timestamp,
    Text,
    Direction,
}

fn column_for(header: &str) -> Option<Column> {
    match header.trim().to_ascii_lowercase().as_str() {
        "user_id" | "userid" | "user" | "sender_id" => Some(Column::User),
        "timestamp" | "sent_at" | "date" | "created_at" | "time" => Some(Column::Timestamp),
        "text" | "message" | "content" | "body" => Some(Column::Text),
        "direction" => Some(Column::Direction),
        _ => None,
    }
}

fn record_from_cells(columns: &[Option<Column>], cells: &[String]) -> RawRecord {
    let mut rec = RawRecord {
        malformed: cells.len() != columns.len(),
        ..Default::default()
    };
    for (col, cell) in columns.iter().zip(cells) {
        let slot = match col {
            Some(Column::User) => &mut rec.user_id,
            Some(Column::Timestamp) => &mut rec.timestamp,
            Some(Column::Text) => &mut rec.text,
            Some(Column::Direction) => &mut rec.direction,
            None => continue,
        };
        *slot = Some(cell.clone());
    }
    rec
}

fn is_sent(direction: Option<&str>) -> Option<bool> {
    match direction.map(|d| d.trim().to_ascii_lowercase()) {
        None => Some(true),
        Some(d) => match d.as_str() {
            "sent" | "outgoing" | "out" | "from_me" => Some(true),
            "received" | "incoming" | "in" | "to_me" => Some(false),
            _ => None,
        },
    }
}

fn convert(app: App, records: impl IntoIterator<Item = RawRecord>) -> ParseOutcome {
    let mut out = ParseOutcome::default();
    for rec in records {
        out.rows_read += 1;
        if rec.malformed {
            out.dropped.malformed += 1;
            continue;
        }
        let (Some(user), Some(ts), Some(sent)) =
            (rec.user_id, rec.timestamp, is_sent(rec.direction.as_deref()))
        else {
            out.dropped.malformed += 1;
            continue;
        };
        let user = user.trim().to_string();
        if user.is_empty() {
            out.dropped.malformed += 1;
            continue;
        }
        if !sent {
            out.dropped.received += 1;
            continue;
        }
        let text = rec.text.unwrap_or_default();
        if text.trim().is_empty() {
            out.dropped.empty_text += 1;
            continue;
        }
        let Some(sent_at) = parse_timestamp(&ts) else {
            out.dropped.bad_timestamp += 1;
            continue;
        };
        match Message::new(user, app, sent_at, text) {
            Ok(m) => out.messages.push(m),
            Err(_) => out.dropped.malformed += 1,
        }
    }
    out
}

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Parses one app export into sent messages.
pub fn parse_export(path: &Path, app: App, format: ExportFormat) -> Result<ParseOutcome> {
    let content = read_lossy(path)?;
    let records = match format {
        ExportFormat::Csv => csv_records(&content, path)?,
        ExportFormat::JsonRecords => json_records(&content, path)?,
        ExportFormat::HtmlTable => html_records(&content),
    };
    Ok(convert(app, records))
}

fn csv_records(content: &str, path: &Path) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(content.as_bytes());
    let columns: Vec<Option<Column>> = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .iter()
        .map(column_for)
        .collect();
    let mut records = Vec::new();
    for row in reader.records() {
        match row {
            Ok(row) => {
                let cells: Vec<String> = row.iter().map(str::to_string).collect();
                records.push(record_from_cells(&columns, &cells));
            }
            Err(_) => records.push(RawRecord {
                malformed: true,
                ..Default::default()
            }),
        }
    }
    Ok(records)
}

fn json_scalar(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn json_records(content: &str, path: &Path) -> Result<Vec<RawRecord>> {
    let value: serde_json::Value =
        serde_json::from_str(content).map_err(|e| Error::format(path, e.to_string()))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut obj) => match obj.remove("messages") {
            Some(serde_json::Value::Array(items)) => items,
            _ => {
                return Err(Error::format(
                    path,
                    "expected a JSON array or an object with a `messages` array",
                ))
            }
        },
        _ => return Err(Error::format(path, "expected a JSON array of records")),
    };
    Ok(items
        .into_iter()
        .map(|item| {
            let serde_json::Value::Object(obj) = item else {
                return RawRecord {
                    malformed: true,
                    ..Default::default()
                };
            };
            let mut rec = RawRecord::default();
            for (key, v) in &obj {
                let Some(col) = column_for(key) else { continue };
                let cell = json_scalar(v);
                // Present but non-scalar (object, array, bool) is malformed;
                // explicit null counts as absent.
                if cell.is_none() && !v.is_null() {
                    rec.malformed = true;
                }
                match col {
                    Column::User => rec.user_id = cell,
                    Column::Timestamp => rec.timestamp = cell,
                    Column::Text => rec.text = cell,
                    Column::Direction => rec.direction = cell,
                }
            }
            rec
        })
        .collect())
}

static ROW_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<tr\b[^>]*>(.*?)</tr\s*>").unwrap());
static CELL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<t([dh])\b[^>]*>(.*?)</t[dh]\s*>").unwrap());
static BR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)<br\s*/?>").unwrap());
static TAG_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?s)<[^>]*>").unwrap());
static ENTITY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(#[0-9]+|#[xX][0-9a-fA-F]+|[a-zA-Z]+);").unwrap());

fn decode_entities(s: &str) -> String {
    ENTITY_RE
        .replace_all(s, |caps: &regex::Captures<'_>| {
            let name = &caps[1];
            let decoded = if let Some(hex) = name.strip_prefix("#x").or(name.strip_prefix("#X")) {
                u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
            } else if let Some(dec) = name.strip_prefix('#') {
                dec.parse::<u32>().ok().and_then(char::from_u32)
            } else {
                match name {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => None,
                }
            };
            decoded.map_or_else(|| caps[0].to_string(), String::from)
        })
        .into_owned()
}

fn cell_text(inner: &str) -> String {
    let with_breaks = BR_RE.replace_all(inner, "\n");
    let stripped = TAG_RE.replace_all(&with_breaks, "");
    decode_entities(stripped.trim())
}

/// Reads the first `<table>` of an HTML export. The first row supplies the
/// column names; later rows are records.
fn html_records(content: &str) -> Vec<RawRecord> {
    let lower = content.to_ascii_lowercase();
    let Some(start) = lower.find("<table") else {
        return Vec::new();
    };
    let end = lower[start..]
        .find("</table")
        .map_or(content.len(), |e| start + e);
    let table = &content[start..end];
    let mut rows = ROW_RE.captures_iter(table).map(|row| {
        CELL_RE
            .captures_iter(&row[1])
            .map(|c| cell_text(&c[2]))
            .collect::<Vec<String>>()
    });
    let Some(header) = rows.next() else {
        return Vec::new();
    };
    let columns: Vec<Option<Column>> = header.iter().map(|h| column_for(h)).collect();
    rows.map(|cells| record_from_cells(&columns, &cells)).collect()
}

pub const CANONICAL_HEADER: [&str; 4] = ["user_id", "app", "sent_at", "text"];

/// Writes messages in the canonical `user_id,app,sent_at,text` CSV schema.
pub fn write_canonical(path: &Path, messages: &[Message]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(CANONICAL_HEADER).map_err(|e| csv_io(path, e))?;
    for m in messages {
        w.write_record([
            m.user_id.as_str(),
            m.app.as_str(),
            &format_timestamp(&m.sent_at),
            m.text.as_str(),
        ])
        .map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a canonical message CSV. Rows that fail validation are dropped and
/// counted like any other export.
pub fn read_canonical(path: &Path) -> Result<ParseOutcome> {
    let content = read_lossy(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(content.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CANONICAL_HEADER {
        return Err(Error::format(
            path,
            format!("expected header `{}`", CANONICAL_HEADER.join(",")),
        ));
    }
    let mut out = ParseOutcome::default();
    for row in reader.records() {
        out.rows_read += 1;
        let Ok(row) = row else {
            out.dropped.malformed += 1;
            continue;
        };
        if row.len() != 4 {
            out.dropped.malformed += 1;
            continue;
        }
        let Ok(app) = row[1].parse::<App>() else {
            out.dropped.malformed += 1;
            continue;
        };
        let Some(ts) = parse_timestamp(&row[2]) else {
            out.dropped.bad_timestamp += 1;
            continue;
        };
        match Message::new(&row[0], app, ts, &row[3]) {
            Ok(m) if !m.user_id.is_empty() => out.messages.push(m),
            Ok(_) => out.dropped.malformed += 1,
            Err(_) => out.dropped.empty_text += 1,
        }
    }
    Ok(out)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &[u8]) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::File::create(&p).unwrap().write_all(content).unwrap();
        p
    }

    #[test]
    fn csv_keeps_only_sent_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "g.csv",
            b"user_id,timestamp,text,direction\n\
              u1,2023-01-01T10:00:00Z,hello,sent\n\
              u1,2023-01-01T10:01:00Z,hi back,received\n\
              u1,2023-01-02T10:00:00Z,\"multi, comma\",sent\n\
              u2,2023-01-02T11:00:00Z,yo,received\n\
              u2,2023-01-03T11:00:00Z,sup,sent\n",
        );
        let out = parse_export(&p, App::Grindr, ExportFormat::Csv).unwrap();
        assert_eq!(out.messages.len(), 3);
        assert_eq!(out.dropped.received, 2);
        assert_eq!(out.rows_read, 5);
        assert_eq!(out.messages[1].text, "multi, comma");
        assert!(out.messages.iter().all(|m| m.app == App::Grindr));
    }

    #[test]
    fn header_only_csv_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "e.csv", b"user_id,timestamp,text,direction\n");
        let out = parse_export(&p, App::Tinder, ExportFormat::Csv).unwrap();
        assert!(out.messages.is_empty());
        assert_eq!(out.rows_read, 0);
    }

    #[test]
    fn json_empty_text_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "i.json",
            br#"[{"user_id":"u1","timestamp":"2023-01-01T00:00:00Z","text":"","direction":"sent"}]"#,
        );
        let out = parse_export(&p, App::Instagram, ExportFormat::JsonRecords).unwrap();
        assert!(out.messages.is_empty());
        assert_eq!(out.dropped.empty_text, 1);
    }

    #[test]
    fn json_accepts_numeric_fields_and_wrapper_object() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "r.json",
            br#"{"messages":[
                {"user_id":17,"timestamp":1672531200,"text":"one"},
                {"user_id":"u","timestamp":"not a date","text":"two"},
                {"user_id":"u","timestamp":"2023-01-01T00:00:00Z","text":["x"]},
                42
            ]}"#,
        );
        let out = parse_export(&p, App::Reddit, ExportFormat::JsonRecords).unwrap();
        assert_eq!(out.messages.len(), 1);
        assert_eq!(out.messages[0].user_id, "17");
        assert_eq!(out.dropped.bad_timestamp, 1);
        assert_eq!(out.dropped.malformed, 2);
        assert_eq!(out.rows_read, 4);
    }

    #[test]
    fn invalid_json_is_a_file_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "bad.json", b"{not json");
        let err = parse_export(&p, App::Reddit, ExportFormat::JsonRecords).unwrap_err();
        assert!(err.to_string().contains("bad.json"));
    }

    #[test]
    fn html_table_with_entities_and_breaks() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "s.html",
            b"<html><body><table>\n\
              <tr><th>user_id</th><th>timestamp</th><th>text</th><th>direction</th></tr>\n\
              <tr><td>u1</td><td>2023-01-01 08:00:00</td><td>fish &amp; chips<br/>later</td><td>sent</td></tr>\n\
              <tr><td>u1</td><td>2023-01-01 09:00:00</td><td><b>bold</b> &#x1F600;</td><td>sent</td></tr>\n\
              <tr><td>u1</td><td>2023-01-01 09:30:00</td><td>short row</td></tr>\n\
              </table></body></html>",
        );
        let out = parse_export(&p, App::Snapchat, ExportFormat::HtmlTable).unwrap();
        assert_eq!(out.messages.len(), 2);
        assert_eq!(out.messages[0].text, "fish & chips\nlater");
        assert_eq!(out.messages[1].text, "bold \u{1F600}");
        assert_eq!(out.dropped.malformed, 1);
    }

    #[test]
    fn invalid_utf8_is_replaced_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "x.csv",
            b"user_id,timestamp,text\nu1,2023-01-01T00:00:00Z,caf\xe9\n",
        );
        let out = parse_export(&p, App::Twitter, ExportFormat::Csv).unwrap();
        assert_eq!(out.messages[0].text, "caf\u{FFFD}");
    }

    #[test]
    fn missing_file_names_path() {
        let err = parse_export(Path::new("/no/such/file.csv"), App::Tinder, ExportFormat::Csv)
            .unwrap_err();
        assert!(err.to_string().contains("/no/such/file.csv"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_format_is_config_error() {
        let err = "xml".parse::<ExportFormat>().unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn canonical_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let ts = parse_timestamp("2023-05-01T12:34:56Z").unwrap();
        let msgs = vec![
            Message::new("a", App::Grindr, ts, "plain").unwrap(),
            Message::new("b,c", App::Reddit, ts, "quote \" and\nnewline, comma").unwrap(),
        ];
        write_canonical(&p, &msgs).unwrap();
        let back = read_canonical(&p).unwrap();
        assert_eq!(back.messages, msgs);
        assert_eq!(back.dropped.total(), 0);
    }
}
