use std::fmt::Write as _;

use super::EvaluationReport;

pub(super) struct Tables {
    pub f1: String,
    pub selection: String,
    pub correlation: String,
    pub ttest: String,
}

fn csv_string(header: Vec<String>, rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn class_name(c: bool) -> &'static str {
    if c {
        "positive"
    } else {
        "negative"
    }
}

pub(super) fn tables(report: &EvaluationReport) -> Tables {
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    let mut f1_rows = Vec::new();
    let mut sel_rows = Vec::new();
    for l in &report.labels {
        for m in &l.models {
            let c = &m.confusion;
            f1_rows.push(vec![
                l.label.to_string(),
                m.model.to_string(),
                l.users.len().to_string(),
                class_name(l.minority_class).to_string(),
                m.f1_minority.to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                c.tn.to_string(),
                m.mean_k.to_string(),
            ]);
            let mut row = vec![l.label.to_string(), m.model.to_string()];
            row.extend(
                report
                    .feature_groups
                    .iter()
                    .map(|g| m.selection.group_means.get(g).copied().unwrap_or(0.0).to_string()),
            );
            row.push(m.mean_k.to_string());
            sel_rows.push(row);
        }
    }
    let f1 = csv_string(
        strs(&["label", "model", "users", "minority_class", "f1_minority", "tp", "fp", "fn", "tn", "mean_k"]),
        f1_rows,
    );
    let mut sel_header = strs(&["label", "model"]);
    sel_header.extend(report.feature_groups.iter().cloned());
    sel_header.push("mean_k".into());
    let selection = csv_string(sel_header, sel_rows);

    let wide = |pick: &dyn Fn(&super::LabelEvaluation) -> &crate::select::RelevanceReport| {
        let mut header = vec!["group".to_string()];
        header.extend(report.labels.iter().map(|l| l.label.to_string()));
        let rows = report
            .feature_groups
            .iter()
            .map(|g| {
                let mut row = vec![g.clone()];
                row.extend(
                    report
                        .labels
                        .iter()
                        .map(|l| pick(l).group_counts.get(g).copied().unwrap_or(0).to_string()),
                );
                row
            })
            .collect();
        csv_string(header, rows)
    };
    Tables {
        f1,
        selection,
        correlation: wide(&|l| &l.correlation),
        ttest: wide(&|l| &l.ttest),
    }
}

/// Markdown summary: an F1 overview, then one block per label and model.
pub fn render_report(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Evaluation report\n");
    let _ = writeln!(s, "Seed: {}  ", report.seed);
    let _ = writeln!(s, "Feature groups: {}\n", report.feature_groups.join(", "));

    let _ = writeln!(s, "## Minority-class F1 (leave-one-out)\n");
    let _ = writeln!(s, "| label | model | users | minority | F1 | mean K |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for l in &report.labels {
        for m in &l.models {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} | {:.3} | {:.1} |",
                l.label,
                m.model,
                l.users.len(),
                class_name(l.minority_class),
                m.f1_minority,
                m.mean_k
            );
        }
    }
    for sk in &report.skipped {
        let _ = writeln!(s, "\nSkipped {}: {}", sk.label, sk.reason);
    }

    for l in &report.labels {
        let _ = writeln!(s, "\n## {}\n", l.label);
        let _ = writeln!(
            s,
            "{} users, {} positive, {} negative; minority class: {}.\n",
            l.users.len(),
            l.positives,
            l.users.len() - l.positives,
            class_name(l.minority_class)
        );
        for m in &l.models {
            let c = &m.confusion;
            let _ = writeln!(s, "### {} / {}\n", l.label, m.model);
            let _ = writeln!(s, "- minority-class F1: {:.4}", m.f1_minority);
            let _ = writeln!(
                s,
                "- confusion (minority as positive): tp {} fp {} fn {} tn {}",
                c.tp, c.fp, c.fn_, c.tn
            );
            let _ = writeln!(s, "- mean K: {:.2}\n", m.mean_k);
            let _ = writeln!(s, "| group | mean selected |");
            let _ = writeln!(s, "|---|---|");
            for (g, v) in &m.selection.group_means {
                let _ = writeln!(s, "| {g} | {v:.2} |");
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s, "### {} / relevance\n", l.label);
        let _ = writeln!(s, "| group | correlated | significant |");
        let _ = writeln!(s, "|---|---|---|");
        for (g, n) in &l.correlation.group_counts {
            let t = l.ttest.group_counts.get(g).copied().unwrap_or(0);
            let _ = writeln!(s, "| {g} | {n} | {t} |");
        }
        if !l.ttest.untestable.is_empty() {
            let _ = writeln!(s, "\nUntestable features: {}", l.ttest.untestable.len());
        }
    }
    s
}
