//! Leave-one-out evaluation with feature search repeated inside each iteration.

use ndarray::{ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dac::{dac_search, SelectionTrace};
use super::folds::complement;
use crate::error::{Error, Result};
use crate::model::{f1_minority, fit, minority_class, Confusion, ModelSpec, TrainedModel};

pub const MIN_LOO_SAMPLES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooIteration {
    pub held_out: usize,
    pub trace: SelectionTrace,
    pub model: TrainedModel,
    pub prediction: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooResult {
    pub predictions: Vec<bool>,
    pub f1_minority: f64,
    pub confusion: Confusion,
    pub iterations: Vec<LooIteration>,
}

impl LooResult {
    pub fn mean_k(&self) -> f64 {
        let n = self.iterations.len().max(1) as f64;
        self.iterations.iter().map(|it| it.trace.best_k as f64).sum::<f64>() / n
    }
}

/// One iteration: search and train on every row except `held_out`, then
/// predict `held_out`. Nothing about the held-out row reaches the search or
/// the fit.
pub fn loo_iteration(x: ArrayView2<'_, f64>, y: &[bool], spec: &ModelSpec, held_out: usize) -> Result<LooIteration> {
    let rest = complement(y.len(), &[held_out]);
    let x_rest = x.select(Axis(0), &rest);
    let y_rest: Vec<bool> = rest.iter().map(|&i| y[i]).collect();
    let trace = dac_search(x_rest.view(), &y_rest, spec)?;
    let cols = &trace.selected_indices;
    let model = fit(spec, x_rest.select(Axis(1), cols).view(), &y_rest)?;
    let row = x.select(Axis(0), &[held_out]).select(Axis(1), cols);
    let prediction = model.predict(row.view())?[0];
    Ok(LooIteration {
        held_out,
        trace,
        model,
        prediction,
    })
}

/// Iterations run in parallel; results are assembled in row order.
pub fn loo_evaluate(x: ArrayView2<'_, f64>, y: &[bool], spec: &ModelSpec) -> Result<LooResult> {
    let n = y.len();
    if x.nrows() != n {
        return Err(Error::Validation(format!("{} rows for {n} labels", x.nrows())));
    }
    if n < MIN_LOO_SAMPLES {
        return Err(Error::Validation(format!(
            "leave-one-out needs at least {MIN_LOO_SAMPLES} samples, got {n}"
        )));
    }
    let minority = minority_class(y);
    let minority_count = y.iter().filter(|&&v| v == minority).count();
    if minority_count < 2 {
        return Err(Error::Domain(format!(
            "leave-one-out needs two samples of each class, minority has {minority_count}"
        )));
    }
    let iterations = (0..n)
        .into_par_iter()
        .map(|i| loo_iteration(x, y, spec, i))
        .collect::<Result<Vec<_>>>()?;
    let predictions: Vec<bool> = iterations.iter().map(|it| it.prediction).collect();
    Ok(LooResult {
        f1_minority: f1_minority(&predictions, y)?,
        confusion: Confusion::count(&predictions, y, minority)?,
        predictions,
        iterations,
    })
}
