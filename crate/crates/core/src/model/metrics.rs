//! Confusion counts and minority-class F1.

use serde::{Deserialize, Serialize};

use crate::dataset::check_both_classes;
use crate::error::{Error, Result};

/// Counts with `positive` as the class of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub positive: bool,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn count(pred: &[bool], truth: &[bool], positive: bool) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::Validation(format!(
                "{} predictions for {} labels",
                pred.len(),
                truth.len()
            )));
        }
        let mut c = Confusion {
            positive,
            ..Default::default()
        };
        for (&p, &t) in pred.iter().zip(truth) {
            match (p == positive, t == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// 2PR/(P+R), or 0 when P+R = 0.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// The less frequent class in `truth`; an even split picks `true`.
pub fn minority_class(truth: &[bool]) -> bool {
    let pos = truth.iter().filter(|&&t| t).count();
    pos <= truth.len() - pos
}

/// F1 with `class` treated as positive.
pub fn f1_for_class(pred: &[bool], truth: &[bool], class: bool) -> Result<f64> {
    Ok(Confusion::count(pred, truth, class)?.f1())
}

/// F1 of the minority class of `truth`.
pub fn f1_minority(pred: &[bool], truth: &[bool]) -> Result<f64> {
    check_both_classes(truth)?;
    f1_for_class(pred, truth, minority_class(truth))
}

pub fn accuracy(pred: &[bool], truth: &[bool]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    ratio(hits, truth.len())
}
