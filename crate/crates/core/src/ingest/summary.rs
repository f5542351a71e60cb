use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::corpus::UserCorpus;
use super::message::App;

/// Per-app message counts and per-user message statistics of the retained
/// population. Counts are raw (before app weighting).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestSummary {
    pub users: usize,
    pub per_app: BTreeMap<App, usize>,
    pub total: usize,
    pub mean: f64,
    pub median: f64,
    pub max: usize,
    pub min: usize,
    /// Sample standard deviation (n − 1 denominator).
    pub sd: f64,
}

impl IngestSummary {
    pub fn from_corpora<'a>(corpora: impl IntoIterator<Item = &'a UserCorpus>) -> Self {
        let mut per_app: BTreeMap<App, usize> = BTreeMap::new();
        let mut counts = Vec::new();
        for c in corpora {
            for m in c.messages() {
                *per_app.entry(m.app).or_default() += 1;
            }
            counts.push(c.message_count());
        }
        counts.sort_unstable();
        let n = counts.len();
        let total: usize = counts.iter().sum();
        let mean = if n == 0 { 0.0 } else { total as f64 / n as f64 };
        let median = match n {
            0 => 0.0,
            _ if n % 2 == 1 => counts[n / 2] as f64,
            _ => (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0,
        };
        let sd = if n < 2 {
            0.0
        } else {
            let ss: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        };
        IngestSummary {
            users: n,
            per_app,
            total,
            mean,
            median,
            max: counts.last().copied().unwrap_or(0),
            min: counts.first().copied().unwrap_or(0),
            sd,
        }
    }

    /// Two text blocks: message counts per app, then per-user statistics.
    pub fn render(&self) -> String {
        let apps: Vec<App> = App::ALL.into_iter().filter(|a| *a != App::Facebook).collect();
        let mut out = String::new();
        let _ = writeln!(out, "Messages per app ({} users)", self.users);
        let mut header = format!("{:>10}", "Total");
        let mut row = format!("{:>10}", self.total);
        for app in &apps {
            let width = app.as_str().len().max(8) + 2;
            let _ = write!(header, "{:>width$}", app.as_str());
            let _ = write!(row, "{:>width$}", self.per_app.get(app).copied().unwrap_or(0));
        }
        if let Some(fb) = self.per_app.get(&App::Facebook) {
            let _ = write!(header, "{:>10}", "facebook");
            let _ = write!(row, "{fb:>10}");
        }
        let _ = writeln!(out, "{header}\n{row}\n");
        let _ = writeln!(out, "Messages per user");
        let _ = writeln!(
            out,
            "{:>14}{:>12}{:>10}{:>10}{:>10}{:>12}",
            "Total Messages", "Mean", "Median", "Maximum", "Minimum", "SD"
        );
        let _ = writeln!(
            out,
            "{:>14}{:>12.2}{:>10.1}{:>10}{:>10}{:>12.2}",
            self.total, self.mean, self.median, self.max, self.min, self.sd
        );
        out
    }
}
