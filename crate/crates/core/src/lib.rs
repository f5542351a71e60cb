//! Behavioral-risk prediction from social and dating-app message corpora.
//!
//! The pipeline runs in stages that hand off through files:
//!
//! 1. [`ingest`]: parse app exports, deduplicate, window and filter users.
//! 2. [`labels`]: turn survey answers into binary outcome labels.
//! 3. [`lexfeat`] and [`embed`]: per-user lexicon, dictionary and embedding features.
//! 4. [`select`] and [`model`]: Fisher-score feature selection inside a
//!    leave-one-out loop, with logistic, linear SVM and boosted-tree classifiers.
//!
//! [`pipeline`] wires the stages together and [`synth`] generates synthetic
//! populations for offline end-to-end checks.

pub mod dataset;
pub mod embed;
pub mod error;
pub mod ingest;
pub mod labels;
pub mod lexfeat;
pub mod model;
pub mod pipeline;

pub mod select;
pub mod synth;
pub mod seed;

pub mod text;

pub use error::{Error, Result};
