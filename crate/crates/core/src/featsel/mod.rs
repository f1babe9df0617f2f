//! Latent feature space construction: PCA projection followed by
//! Shapley-value screening of the projected components.

mod pca;
mod shapley;
mod table;

pub use pca::{
    column_groups, fit_grouped_pca, fit_pca, fit_pca_clamped, transform_grouped_pca, transform_pca, GroupedPca,
    PcaModel,
};
pub use shapley::{
    select_features, shapley_importance, shapley_values, ImportanceReport, ShapleyMode, DEFAULT_THRESHOLD,
    MAX_EXACT_FEATURES,
};
pub use table::{FeatureTable, SampleId};

/// PCA components kept per table by default.
pub const DEFAULT_COMPONENTS: usize = 50;
