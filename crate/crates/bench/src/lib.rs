//! Input builders shared by the criterion benchmarks.

use scanfuse::synth::{generate_confidence_dataset, generate_feature_dataset, SynthConfig};
use scanfuse::{Dataset, FeatureTable};

/// A seeded confidence dataset with `scans_per_class` scans of each class.
pub fn confidence_dataset(scans_per_class: usize, seed: u64) -> Dataset {
    let cfg = SynthConfig { seed, class_counts: vec![scans_per_class; 5], ..SynthConfig::default() };
    generate_confidence_dataset(&cfg).expect("valid synthetic config")
}

/// A seeded labeled feature table with `rows_per_class` rows of each class.
pub fn feature_table(rows_per_class: usize, feature_dim: usize, seed: u64) -> FeatureTable {
    let cfg = SynthConfig { seed, class_counts: vec![rows_per_class; 5], feature_dim, ..SynthConfig::default() };
    generate_feature_dataset(&cfg).expect("valid synthetic config")
}
