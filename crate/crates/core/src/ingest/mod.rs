//! Raw export parsing, deduplication, windowing and eligibility filtering.

mod corpus;
mod message;
mod parse;
mod summary;

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use corpus::{
    build_corpora, deduplicate, Exclusion, ExclusionReason, ExclusionReport, IngestConfig,
    UserCorpus,
};
pub use message::{format_timestamp, parse_timestamp, App, Message};
pub use parse::{
    parse_export, read_canonical, write_canonical, DropCounts, ExportFormat, ParseOutcome,
    CANONICAL_HEADER,
};
pub use summary::IngestSummary;

use crate::error::{Error, Result};

/// One export file and how to read it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportSpec {
    pub path: PathBuf,
    pub app: App,
    pub format: ExportFormat,
}

/// Finds export files named `<app>[_<anything>].<csv|json|html>` in `dir`,
/// sorted by path. Unrecognized files are skipped.
pub fn discover_exports(dir: &Path) -> Result<Vec<ExportSpec>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut apps_longest_first = App::ALL.to_vec();
    apps_longest_first.sort_by_key(|a| std::cmp::Reverse(a.as_str().len()));

    let mut specs = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let (Some(stem), Some(ext)) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        let Some(format) = ExportFormat::from_extension(ext) else {
            continue;
        };
        let stem = stem.to_ascii_lowercase();
        let app = apps_longest_first.iter().copied().find(|a| {
            stem == a.as_str()
                || stem
                    .strip_prefix(a.as_str())
                    .is_some_and(|rest| rest.starts_with('_') || rest.starts_with('-'))
        });
        if let Some(app) = app {
            specs.push(ExportSpec { path, app, format });
        }
    }
    specs.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(specs)
}

/// Parses every export (in parallel) and concatenates the results in spec order.
pub fn parse_all(specs: &[ExportSpec]) -> Result<ParseOutcome> {
    let parsed: Vec<Result<ParseOutcome>> = specs
        .par_iter()
        .map(|s| parse_export(&s.path, s.app, s.format))
        .collect();
    let mut merged = ParseOutcome::default();
    for outcome in parsed {
        let outcome = outcome?;
        merged.rows_read += outcome.rows_read;
        merged.dropped.add(&outcome.dropped);
        merged.messages.extend(outcome.messages);
    }
    Ok(merged)
}
