//! Scan-level decision fusion.
//!
//! Each slice's fuzzy density is its largest class probability. The densities
//! generate a Sugeno λ-measure over sets of slices, with λ either solved from
//! the normalization identity `1 + λ = ∏(1 + λ gᵢ)` or fixed by a grid search.
//! Class probabilities are then integrated against that measure with the
//! Choquet integral and the scan takes the class with the largest value.
//!
//! Two orderings are supported. [`SortMode::Density`] sorts slices once by their
//! maximum confidence and reuses that order for every class, so increments
//! may be negative; [`SortMode::Classical`] sorts each class's probabilities,
//! which is the textbook integral and the one the boundedness and idempotence
//! properties hold for.

mod baseline;
mod choquet;
mod measure;

pub use baseline::{fuse_baseline, scan_summary, summary_table, BaselineKind, LearnedFusion};
pub use choquet::{
    accuracy_at, choquet_fuse, fuse_dataset, grid_search_lambda, FusedScan, FusionConfig, Grid, GridSearch,
    MeasureMode, SortMode, TieBreak,
};
pub use measure::{
    entropy_weight, normalization_residual, solve_lambda, subset_measure, tail_measures, FuzzyDensities,
    LambdaSource, SliceWeight, ADDITIVE_TOLERANCE,
};
