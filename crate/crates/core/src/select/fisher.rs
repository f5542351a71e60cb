//! Fisher score: between-class over within-class variation per feature.

use std::cmp::Ordering;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::check_both_classes;
use crate::error::{Error, Result};

/// Score given to features with zero within-class and positive between-class
/// variation. Ranks above every finite score.
pub const SEPARATOR_SCORE: f64 = f64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherScores {
    pub scores: Vec<f64>,
    /// Between-class term, used to order perfect separators.
    pub bcv: Vec<f64>,
}

impl FisherScores {
    /// Feature indices from best to worst: score, then BCV among separators,
    /// then lower index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.compare(a, b));
        idx
    }

    pub fn top_k(&self, k: usize) -> Vec<usize> {
        let mut r = self.ranking();
        r.truncate(k);
        r
    }

    fn compare(&self, a: usize, b: usize) -> Ordering {
        let (sa, sb) = (self.scores[a], self.scores[b]);
        sb.total_cmp(&sa)
            .then_with(|| {
                if sa == SEPARATOR_SCORE {
                    self.bcv[b].total_cmp(&self.bcv[a])
                } else {
                    Ordering::Equal
                }
            })
            .then(a.cmp(&b))
    }
}

/// BCV = sum_j n_j (mean_j - mean)^2 = n_0 n_1 / n (mean_1 - mean_0)^2,
/// WCV = sum_j sum_{x in j} (x - mean_j)^2, score = BCV / WCV with [`SEPARATOR_SCORE`] for WCV = 0 < BCV and 0 when
/// both vanish.
pub fn fisher_scores(x: ArrayView2<'_, f64>, y: &[bool]) -> Result<FisherScores> {
    if x.nrows() != y.len() {
        return Err(Error::Validation(format!(
            "{} rows for {} labels",
            x.nrows(),
            y.len()
        )));
    }
    check_both_classes(y)?;
    let n1 = y.iter().filter(|&&v| v).count();
    let n0 = y.len() - n1;
    let d = x.ncols();
    let mut scores = Vec::with_capacity(d);
    let mut bcvs = Vec::with_capacity(d);
    let n = y.len() as f64;
    for col in x.columns() {
        // Work with deviations from a rough center so large offsets do not
        // cancel away the class-mean difference.
        let center = col.sum() / n;
        let class_offset = |cls: bool, count: usize| {
            let vals = col.iter().zip(y).filter(|(_, &c)| c == cls).map(|(v, _)| *v);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut sum = CompensatedSum::default();
            for v in vals {
                lo = lo.min(v);
                hi = hi.max(v);
                sum.add(v - center);
            }
            // A constant class keeps its exact value so its spread is exactly zero.
            if lo == hi {
                lo - center
            } else {
                sum.value() / count as f64
            }
        };
        let d0 = class_offset(false, n0);
        let d1 = class_offset(true, n1);
        let bcv = n0 as f64 * n1 as f64 / n * (d1 - d0).powi(2);
        let wcv: f64 = col
            .iter()
            .zip(y)
            .map(|(v, &c)| ((v - center) - if c { d1 } else { d0 }).powi(2))
            .sum();
        let score = if wcv > 0.0 {
            bcv / wcv
        } else if bcv > 0.0 {
            SEPARATOR_SCORE
        } else {
            0.0
        };
        scores.push(score);
        bcvs.push(bcv);
    }
    Ok(FisherScores { scores, bcv: bcvs })
}

/// Neumaier summation.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        self.carry += if self.sum.abs() >= v.abs() {
            (self.sum - t) + v
        } else {
            (v - t) + self.sum
        };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
