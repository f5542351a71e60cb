//! Classifiers and evaluation metrics.

mod gbm;
mod logistic;
mod metrics;
mod standardize;
mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::dataset::check_both_classes;
use crate::error::{Error, Result};

pub use gbm::{fit_gbm, GbmModel, RegressionTree, TreeNode};
pub use logistic::{fit_logistic, gradient_check, relative_error, sigmoid, LogisticFit, LogisticObjective};
pub use metrics::{accuracy, f1_for_class, f1_minority, minority_class, Confusion};
pub use standardize::Standardizer;
pub use svm::{fit_linear_svm, primal_objective, SvmFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    LinearSvm,
    Gbm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::LinearSvm, ModelKind::Gbm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::Gbm => "gbm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Classifier choice and hyperparameters. Only the block for `kind` is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// L2 strength in `mean log-loss + (lambda / 2n)|w|^2`.
    pub lambda: f64,
    pub max_iter: usize,
    /// Hinge-loss penalty.
    pub c: f64,
    pub svm_epochs: usize,
    pub stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: ModelKind::Logistic,
            lambda: 1.0,
            max_iter: 1000,
            c: 1.0,
            svm_epochs: 100,
            stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            seed: 0,
        }
    }
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> Self {
        ModelSpec {
            kind,
            ..ModelSpec::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{} requires positive {what}", self.kind)));
        match self.kind {
            ModelKind::Logistic => {
                if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
                    return bad("lambda");
                }
                if self.max_iter == 0 {
                    return bad("max_iter");
                }
            }
            ModelKind::LinearSvm => {
                if !(self.c > 0.0 && self.c.is_finite()) {
                    return bad("c");
                }
                if self.svm_epochs == 0 {
                    return bad("svm_epochs");
                }
            }
            ModelKind::Gbm => {
                if self.stages == 0 {
                    return bad("stages");
                }
                if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
                    return bad("learning_rate");
                }
                if self.max_depth == 0 {
                    return bad("max_depth");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Parameters {
    Linear { weights: Vec<f64>, bias: f64 },
    Gbm(GbmModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub n_features: usize,
    /// Present for linear kinds.
    pub standardization: Option<Standardizer>,
    pub parameters: Parameters,
}

/// Trains `spec` on `(x, y)`; linear kinds standardize with statistics of `x`.
pub fn fit(spec: &ModelSpec, x: ArrayView2<'_, f64>, y: &[bool]) -> Result<TrainedModel> {
    spec.validate()?;
    let (n, d) = x.dim();
    if n != y.len() {
        return Err(Error::Validation(format!("{n} rows for {} labels", y.len())));
    }
    if d == 0 {
        return Err(Error::Validation("no feature columns".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite feature value".into()));
    }
    check_both_classes(y)?;

    let (standardization, parameters) = match spec.kind {
        ModelKind::Logistic | ModelKind::LinearSvm => {
            let std = Standardizer::fit(x);
            let xs = std.transform(x);
            let (weights, bias) = if spec.kind == ModelKind::Logistic {
                let f = fit_logistic(xs.view(), y, spec.lambda, spec.max_iter);
                (f.weights, f.bias)
            } else {
                let f = fit_linear_svm(xs.view(), y, spec.c, spec.svm_epochs, spec.seed);
                (f.weights, f.bias)
            };
            (Some(std), Parameters::Linear { weights, bias })
        }
        ModelKind::Gbm => (
            None,
            Parameters::Gbm(fit_gbm(x, y, spec.stages, spec.learning_rate, spec.max_depth)),
        ),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_features: d,
        standardization,
        parameters,
    })
}

impl TrainedModel {
    /// Linear score, or boosted log-odds for gbm.
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Validation(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        let owned;
        let x = match &self.standardization {
            Some(s) => {
                owned = s.transform(x);
                owned.view()
            }
            None => x,
        };
        Ok(match &self.parameters {
            Parameters::Linear { weights, bias } => x
                .rows()
                .into_iter()
                .map(|r| r.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias)
                .collect(),
            Parameters::Gbm(m) => x.rows().into_iter().map(|r| m.raw_score(r)).collect(),
        })
    }

    /// Threshold 0 on the score, which is probability 0.5 for gbm.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<bool>> {
        Ok(self.decision_function(x)?.into_iter().map(|s| s > 0.0).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn column_mismatch_rejected() {
        let x = array![[0.0], [1.0], [2.0], [3.0]];
        let m = fit(&ModelSpec::default(), x.view(), &[false, false, true, true]).unwrap();
        let err = m.predict(array![[1.0, 2.0]].view()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn spec_json_defaults() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"gbm"}"#).unwrap();
        assert_eq!(s.stages, 100);
        assert_eq!(s.max_depth, 3);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"gbm","depth":2}"#).is_err());
    }

    #[test]
    fn invalid_hyperparameters_rejected() {
        let mut s = ModelSpec::new(ModelKind::LinearSvm);
        s.c = 0.0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn model_json_round_trips() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 1.0], [3.0, 0.0]];
        let y = [false, false, true, true];
        for kind in ModelKind::ALL {
            let m = fit(&ModelSpec::new(kind), x.view(), &y).unwrap();
            let back: TrainedModel = serde_json::from_str(&m.to_json()).unwrap();
            assert_eq!(back, m);
        }
    }
}
