//! Per-user feature tables and labeled datasets.

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::labels::{LabelSet, Outcome};

/// Feature group of a column name: the text before the first `.`.
pub fn feature_group(name: &str) -> &str {
    name.split_once('.').map_or(name, |(g, _)| g)
}

/// Rows are users, columns are named features (`<group>.<name>`).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub user_ids: Vec<String>,
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(user_ids: Vec<String>, names: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if user_ids.len() != rows.len() {
            return Err(Error::Validation(format!(
                "{} users but {} feature rows",
                user_ids.len(),
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != names.len()) {
            return Err(Error::Validation(format!(
                "feature row of length {} for {} columns",
                r.len(),
                names.len()
            )));
        }
        Ok(FeatureMatrix {
            user_ids,
            names,
            rows,
        })
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    /// Column-wise concatenation over the users present in both, in `self` order.
    pub fn merge(&self, other: &FeatureMatrix) -> Result<FeatureMatrix> {
        let index: HashMap<&str, usize> = other
            .user_ids
            .iter()
            .enumerate()
            .map(|(i, u)| (u.as_str(), i))
            .collect();
        let mut user_ids = Vec::new();
        let mut rows = Vec::new();
        for (u, row) in self.user_ids.iter().zip(&self.rows) {
            if let Some(&j) = index.get(u.as_str()) {
                user_ids.push(u.clone());
                rows.push(row.iter().chain(&other.rows[j]).copied().collect());
            }
        }
        let names = self.names.iter().chain(&other.names).cloned().collect();
        FeatureMatrix::new(user_ids, names, rows)
    }

    /// Writes `user_id,<names...>`; values use the shortest exact decimal form.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let err = |e: csv::Error| Error::format(path, e.to_string());
        let mut header = vec!["user_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(err)?;
        for (u, row) in self.user_ids.iter().zip(&self.rows) {
            let mut rec = vec![u.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<FeatureMatrix> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
        let header = r
            .headers()
            .map_err(|e| Error::format(path, e.to_string()))?
            .clone();
        if header.get(0) != Some("user_id") {
            return Err(Error::format(path, "first column must be user_id"));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut user_ids = Vec::new();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
            if rec.len() != names.len() + 1 {
                return Err(Error::format(path, format!("row {}: wrong field count", line + 1)));
            }
            user_ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::format(path, format!("row {}: bad number `{v}`", line + 1)))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        FeatureMatrix::new(user_ids, names, rows)
    }
}

/// Labeled design matrix for one outcome. Both classes present, all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<bool>,
    pub feature_names: Vec<String>,
    pub user_ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Vec<bool>,
        feature_names: Vec<String>,
        user_ids: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = x.dim();
        if y.len() != n || user_ids.len() != n || feature_names.len() != d {
            return Err(Error::Validation(format!(
                "shape mismatch: x is {n}x{d}, {} labels, {} users, {} names",
                y.len(),
                user_ids.len(),
                feature_names.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }
        check_both_classes(&y)?;
        Ok(Dataset {
            x,
            y,
            feature_names,
            user_ids,
        })
    }

    /// Users with a non-excluded `outcome` label, in feature-matrix order.
    pub fn from_features(features: &FeatureMatrix, labels: &[LabelSet], outcome: Outcome) -> Result<Self> {
        let by_user: HashMap<&str, &LabelSet> =
            labels.iter().map(|l| (l.user_id.as_str(), l)).collect();
        let mut rows = Vec::new();
        let mut y = Vec::new();
        let mut users = Vec::new();
        for (u, row) in features.user_ids.iter().zip(&features.rows) {
            let Some(label) = by_user.get(u.as_str()).and_then(|l| l.get(outcome).as_bool()) else {
                continue;
            };
            rows.extend_from_slice(row);
            y.push(label);
            users.push(u.clone());
        }
        let x = Array2::from_shape_vec((users.len(), features.n_features()), rows)
            .map_err(|e| Error::Validation(e.to_string()))?;
        Dataset::new(x, y, features.names.clone(), users)
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Copy restricted to `rows`, in the given order. No class check.
    pub fn rows(&self, rows: &[usize]) -> (Array2<f64>, Vec<bool>) {
        (
            self.x.select(Axis(0), rows),
            rows.iter().map(|&i| self.y[i]).collect(),
        )
    }

    /// The dataset with sample `i` removed.
    pub fn without(&self, i: usize) -> Result<Dataset> {
        let keep: Vec<usize> = (0..self.n_samples()).filter(|&j| j != i).collect();
        let (x, y) = self.rows(&keep);
        let users = keep.iter().map(|&j| self.user_ids[j].clone()).collect();
        Dataset::new(x, y, self.feature_names.clone(), users)
    }
}

pub fn check_both_classes(y: &[bool]) -> Result<()> {
    let pos = y.iter().filter(|&&v| v).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Domain(format!(
            "labels must contain both classes ({pos} positive of {})",
            y.len()
        )));
    }
    Ok(())
}
