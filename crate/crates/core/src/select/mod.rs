//! Fisher-score feature selection, nested leave-one-out evaluation and
//! relevance reports.

mod dac;
mod fisher;
mod folds;
mod loo;
mod reports;

pub use dac::{
    coarse_candidates, dac_search, fine_candidates, GridPoint, SelectionTrace, COARSE_GRID, CV_FOLDS,
    FINE_OFFSETS, MIN_SEARCH_SAMPLES,
};
pub use fisher::{fisher_scores, FisherScores, SEPARATOR_SCORE};
pub use folds::{complement, stratified_folds};
pub use loo::{loo_evaluate, loo_iteration, LooIteration, LooResult, MIN_LOO_SAMPLES};
pub use reports::{
    correlation_report, pearson_with_labels, pooled_t_test, selection_summary, ttest_report, FeatureStat,
    RelevanceReport, SelectionSummary,
};
