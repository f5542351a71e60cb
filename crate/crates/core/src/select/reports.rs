//! Univariate relevance reports and selection summaries grouped by feature prefix.

use indexmap::IndexMap;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::loo::LooResult;
use crate::dataset::feature_group;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub name: String,
    pub statistic: f64,
    /// Correlation reports leave this empty.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceReport {
    /// Retained features per group; every group appears, in column order.
    pub group_counts: IndexMap<String, usize>,
    pub retained: Vec<FeatureStat>,
    pub untestable: Vec<String>,
}

fn empty_groups(names: &[String]) -> IndexMap<String, usize> {
    let mut g = IndexMap::new();
    for n in names {
        g.entry(feature_group(n).to_string()).or_insert(0);
    }
    g
}

fn check_shape(x: ArrayView2<'_, f64>, y: &[bool], names: &[String]) -> Result<()> {
    if x.nrows() != y.len() || x.ncols() != names.len() {
        return Err(Error::Validation(format!(
            "x is {}x{} with {} labels and {} names",
            x.nrows(),
            x.ncols(),
            y.len(),
            names.len()
        )));
    }
    Ok(())
}

/// Pearson correlation with y as 0/1; zero-variance columns give 0.
pub fn pearson_with_labels(col: impl Iterator<Item = f64> + Clone, y: &[bool]) -> f64 {
    let n = y.len() as f64;
    let t = |b: bool| if b { 1.0 } else { 0.0 };
    let mx = col.clone().sum::<f64>() / n;
    let my = y.iter().map(|&b| t(b)).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (v, &b) in col.zip(y) {
        let (dx, dy) = (v - mx, t(b) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
    }
}

/// Retains features with `|r| > threshold`.
pub fn correlation_report(x: ArrayView2<'_, f64>, y: &[bool], names: &[String], threshold: f64) -> Result<RelevanceReport> {
    check_shape(x, y, names)?;
    let mut group_counts = empty_groups(names);
    let mut retained = Vec::new();
    for (col, name) in x.columns().into_iter().zip(names) {
        let r = pearson_with_labels(col.iter().copied(), y);
        if r.abs() > threshold {
            *group_counts.get_mut(feature_group(name)).expect("group listed") += 1;
            retained.push(FeatureStat {
                name: name.clone(),
                statistic: r,
                p_value: None,
            });
        }
    }
    Ok(RelevanceReport {
        group_counts,
        retained,
        untestable: Vec::new(),
    })
}

/// Pooled-variance two-sample t statistic and two-sided p-value, or `None`
/// when a group has fewer than two samples.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Option<(f64, f64)> {
    let (na, nb) = (a.len(), b.len());
    if na < 2 || nb < 2 {
        return None;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let ss = |v: &[f64], m: f64| v.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let df = (na + nb - 2) as f64;
    let pooled = (ss(a, ma) + ss(b, mb)) / df;
    let se = (pooled * (1.0 / na as f64 + 1.0 / nb as f64)).sqrt();
    if se == 0.0 {
        return Some(if ma == mb {
            (0.0, 1.0)
        } else {
            ((mb - ma).signum() * f64::INFINITY, 0.0)
        });
    }
    let t = (mb - ma) / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Some((t, (2.0 * dist.sf(t.abs())).min(1.0)))
}

/// Retains features with two-sided p < alpha between the y=0 and y=1 groups.
pub fn ttest_report(x: ArrayView2<'_, f64>, y: &[bool], names: &[String], alpha: f64) -> Result<RelevanceReport> {
    check_shape(x, y, names)?;
    let mut group_counts = empty_groups(names);
    let mut retained = Vec::new();
    let mut untestable = Vec::new();
    for (col, name) in x.columns().into_iter().zip(names) {
        let (mut neg, mut pos) = (Vec::new(), Vec::new());
        for (&v, &b) in col.iter().zip(y) {
            if b { pos.push(v) } else { neg.push(v) }
        }
        match pooled_t_test(&neg, &pos) {
            None => untestable.push(name.clone()),
            Some((t, p)) if p < alpha => {
                *group_counts.get_mut(feature_group(name)).expect("group listed") += 1;
                retained.push(FeatureStat {
                    name: name.clone(),
                    statistic: t,
                    p_value: Some(p),
                });
            }
            Some(_) => {}
        }
    }
    Ok(RelevanceReport {
        group_counts,
        retained,
        untestable,
    })
}

/// Mean number of selected features per group across LOO iterations, plus mean K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub group_means: IndexMap<String, f64>,
    pub mean_k: f64,
}

pub fn selection_summary(result: &LooResult, names: &[String]) -> SelectionSummary {
    let mut totals: IndexMap<String, f64> =
        empty_groups(names).into_iter().map(|(g, _)| (g, 0.0)).collect();
    for it in &result.iterations {
        for &i in &it.trace.selected_indices {
            *totals.get_mut(feature_group(&names[i])).expect("group listed") += 1.0;
        }
    }
    let n = result.iterations.len().max(1) as f64;
    totals.values_mut().for_each(|v| *v /= n);
    SelectionSummary {
        group_means: totals,
        mean_k: result.mean_k(),
    }
}
