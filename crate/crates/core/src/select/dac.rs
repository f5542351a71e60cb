//! Divide-and-conquer search for the number of Fisher-ranked features.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::fisher::fisher_scores;
use super::folds::{complement, stratified_folds};
use crate::error::{Error, Result};
use crate::model::{f1_for_class, fit, minority_class, ModelSpec};
use crate::seed;

pub const COARSE_GRID: [usize; 8] = [1, 21, 41, 61, 81, 101, 121, 141];
pub const FINE_OFFSETS: [isize; 5] = [-10, -5, 0, 5, 10];
pub const CV_FOLDS: usize = 5;
pub const MIN_SEARCH_SAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: usize,
    pub mean_f1: f64,
    pub fold_f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    /// Scores on all rows passed to the search.
    pub fisher_scores: Vec<f64>,
    pub coarse_grid: Vec<GridPoint>,
    /// Fine candidates not already evaluated in the coarse pass.
    pub fine_grid: Vec<GridPoint>,
    pub best_k: usize,
    pub best_f1: f64,
    pub selected_indices: Vec<usize>,
    /// Folds whose training split held a single class; they score 0.
    pub degenerate_folds: Vec<usize>,
}

/// Coarse grid clipped to `[1, d]`, deduplicated.
pub fn coarse_candidates(d: usize) -> Vec<usize> {
    dedup(COARSE_GRID.iter().map(|&k| k.min(d)).collect())
}

/// `best_k + {-10,-5,0,5,10}` clipped to `[1, d]`, deduplicated.
pub fn fine_candidates(best_k: usize, d: usize) -> Vec<usize> {
    dedup(
        FINE_OFFSETS
            .iter()
            .map(|&o| (best_k as isize + o).clamp(1, d as isize) as usize)
            .collect(),
    )
}

fn dedup(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

struct Fold {
    x_train: Array2<f64>,
    y_train: Vec<bool>,
    x_test: Array2<f64>,
    y_test: Vec<bool>,
    /// `None` when the training split has one class.
    ranking: Option<Vec<usize>>,
}

/// Chooses K by stratified 5-fold CV on the minority-class F1 of `y`,
/// recomputing Fisher scores on each fold's training split. The coarse
/// pass is refined around its winner; equal F1 favors the smaller K.
pub fn dac_search(x: ArrayView2<'_, f64>, y: &[bool], spec: &ModelSpec) -> Result<SelectionTrace> {
    let (n, d) = x.dim();
    if n < MIN_SEARCH_SAMPLES {
        return Err(Error::Validation(format!(
            "feature search needs at least {MIN_SEARCH_SAMPLES} samples, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::Validation("no feature columns".into()));
    }
    let full = fisher_scores(x, y)?;
    let minority = minority_class(y);

    let mut rng = seed::rng(spec.seed, "cv_folds");
    let mut degenerate_folds = Vec::new();
    let folds: Vec<Fold> = stratified_folds(y, CV_FOLDS, &mut rng)
        .into_iter()
        .enumerate()
        .map(|(f, test)| {
            let train = complement(n, &test);
            let y_train: Vec<bool> = train.iter().map(|&i| y[i]).collect();
            let x_train = x.select(Axis(0), &train);
            let single = y_train.iter().all(|&v| v == y_train[0]);
            let ranking = if single {
                degenerate_folds.push(f);
                None
            } else {
                Some(fisher_scores(x_train.view(), &y_train)?.ranking())
            };
            Ok(Fold {
                x_test: x.select(Axis(0), &test),
                y_test: test.iter().map(|&i| y[i]).collect(),
                x_train,
                y_train,
                ranking,
            })
        })
        .collect::<Result<_>>()?;

    let evaluate = |k: usize| -> Result<GridPoint> {
        let fold_f1 = folds
            .iter()
            .map(|fold| {
                let Some(ranking) = &fold.ranking else {
                    return Ok(0.0);
                };
                let cols = &ranking[..k];
                let model = fit(spec, fold.x_train.select(Axis(1), cols).view(), &fold.y_train)?;
                let pred = model.predict(fold.x_test.select(Axis(1), cols).view())?;
                f1_for_class(&pred, &fold.y_test, minority)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mean_f1 = fold_f1.iter().sum::<f64>() / fold_f1.len() as f64;
        Ok(GridPoint { k, mean_f1, fold_f1 })
    };

    let consider = |best: &mut (usize, f64), p: &GridPoint| {
        if p.mean_f1 > best.1 || (p.mean_f1 == best.1 && p.k < best.0) {
            *best = (p.k, p.mean_f1);
        }
    };
    let mut best = (1, 0.0);

    let coarse_k = coarse_candidates(d);
    let coarse_grid = coarse_k.iter().map(|&k| evaluate(k)).collect::<Result<Vec<_>>>()?;
    coarse_grid.iter().for_each(|p| consider(&mut best, p));

    let fine_grid = fine_candidates(best.0, d)
        .into_iter()
        .filter(|k| !coarse_k.contains(k))
        .map(evaluate)
        .collect::<Result<Vec<_>>>()?;
    fine_grid.iter().for_each(|p| consider(&mut best, p));
    let (best_k, best_f1) = best;

    Ok(SelectionTrace {
        selected_indices: full.top_k(best_k),
        fisher_scores: full.scores,
        coarse_grid,
        fine_grid,
        best_k,
        best_f1,
        degenerate_folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_grid_clips_to_d() {
        assert_eq!(coarse_candidates(3), vec![1, 3]);
        assert_eq!(coarse_candidates(500), COARSE_GRID.to_vec());
        assert_eq!(coarse_candidates(50), vec![1, 21, 41, 50]);
    }

    #[test]
    fn fine_grid_clips_and_dedups() {
        assert_eq!(fine_candidates(1, 100), vec![1, 6, 11]);
        assert_eq!(fine_candidates(21, 23), vec![11, 16, 21, 23]);
        assert_eq!(fine_candidates(41, 200), vec![31, 36, 41, 46, 51]);
    }
}
