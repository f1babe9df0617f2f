//! The four-way scan fusion comparison on synthetic confidence maps.
//!
//! Two independent splits are generated from one [`SynthConfig`]. The
//! training split fits the learned baseline and picks the grid λ; every
//! method is then scored on the test split, next to plain slice-level
//! argmax accuracy.

use serde::{Deserialize, Serialize};

use crate::boostnet::TrainConfig;
use crate::confmap::Dataset;
use crate::error::{Error, Result};
use crate::fusion::{
    fuse_baseline, fuse_dataset, grid_search_lambda, BaselineKind, FusedScan, FusionConfig, LearnedFusion,
};
use crate::metrics::{evaluate, EvalReport, LikelihoodForm};
use crate::seed;
use crate::synth::{generate_confidence_dataset, slice_accuracy, SynthConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fig6Config {
    pub seed: u64,
    pub synth: SynthConfig,
    pub fusion: FusionConfig,
    pub train: TrainConfig,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Self { seed: 42, synth: SynthConfig::fig6(), fusion: FusionConfig::default(), train: TrainConfig::default() }
    }
}

/// Scores of one fusion method on the test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: String,
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig6Outcome {
    pub train_scans: usize,
    pub test_scans: usize,
    pub test_slices: usize,
    pub slice_accuracy: f64,
    pub grid_lambda: f64,
    pub methods: Vec<MethodScore>,
}

impl Fig6Outcome {
    pub fn accuracy_of(&self, method: &str) -> Option<f64> {
        self.methods.iter().find(|m| m.method == method).map(|m| m.accuracy)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "train scans {}  test scans {}  test slices {}  grid λ {:.2}\n",
            self.train_scans, self.test_scans, self.test_slices, self.grid_lambda
        );
        s.push_str(&format!(
            "{:<14} {:>8} {:>9} {:>11} {:>11} {:>6}\n",
            "method", "accuracy", "precision", "sensitivity", "specificity", "f1"
        ));
        s.push_str(&format!("{:<14} {:>8.4}\n", "slice_argmax", self.slice_accuracy));
        for m in &self.methods {
            s.push_str(&format!(
                "{:<14} {:>8.4} {:>9.4} {:>11.4} {:>11.4} {:>6.4}\n",
                m.method, m.accuracy, m.precision, m.sensitivity, m.specificity, m.f1
            ));
        }
        s
    }
}

/// Everything the comparison produces, including the data it ran on.
#[derive(Clone, Debug)]
pub struct Fig6Run {
    pub train: Dataset,
    pub test: Dataset,
    /// Test-split fusion per method, in the order of [`Fig6Outcome::methods`].
    pub predictions: Vec<(String, Vec<FusedScan>)>,
    pub reports: Vec<(String, EvalReport)>,
    pub outcome: Fig6Outcome,
}

pub const METHODS: [&str; 5] = ["mean", "majority", "mlp", "fuzzy_exact", "fuzzy_grid"];

/// The train and test splits the comparison uses.
pub fn splits(cfg: &Fig6Config) -> Result<(Dataset, Dataset)> {
    let split = |name: &str| {
        let synth = SynthConfig { seed: seed::derive(cfg.seed, name), ..cfg.synth.clone() };
        generate_confidence_dataset(&synth)
    };
    Ok((split("fig6/train")?, split("fig6/test")?))
}

/// Runs the comparison end to end.
pub fn run_fig6(cfg: &Fig6Config) -> Result<Fig6Run> {
    cfg.fusion.validate()?;
    cfg.train.validate()?;
    let (train, test) = splits(cfg)?;
    let labels: Vec<usize> = test
        .scans
        .iter()
        .map(|s| s.true_label.ok_or_else(|| Error::MissingLabels(s.scan_id.clone())))
        .collect::<Result<_>>()?;

    let baseline = |kind, model: Option<&LearnedFusion>| -> Result<Vec<FusedScan>> {
        test.scans.iter().map(|s| fuse_baseline(s, kind, model)).collect()
    };
    let train_cfg = TrainConfig { seed: seed::derive(cfg.seed, "fig6/mlp"), ..cfg.train.clone() };
    let learned = LearnedFusion::train(&train, &train_cfg)?;
    let exact_cfg = FusionConfig { measure: crate::fusion::MeasureMode::Exact, ..cfg.fusion.clone() };
    let search = grid_search_lambda(&train, &cfg.fusion)?;
    let grid_cfg = cfg.fusion.with_lambda(search.lambda);

    let predictions = vec![
        ("mean".to_string(), baseline(BaselineKind::Mean, None)?),
        ("majority".to_string(), baseline(BaselineKind::Majority, None)?),
        ("mlp".to_string(), baseline(BaselineKind::Learned, Some(&learned))?),
        ("fuzzy_exact".to_string(), fuse_dataset(&test, &exact_cfg)?),
        ("fuzzy_grid".to_string(), fuse_dataset(&test, &grid_cfg)?),
    ];
    let mut reports = Vec::new();
    let mut methods = Vec::new();
    for (name, fused) in &predictions {
        let pred: Vec<usize> = fused.iter().map(|f| f.decision).collect();
        let report = evaluate(&test.label_space, &labels, &pred, None, LikelihoodForm::Multiclass)?;
        let m = &report.classification;
        methods.push(MethodScore {
            method: name.clone(),
            accuracy: m.accuracy,
            precision: m.precision,
            sensitivity: m.sensitivity,
            specificity: m.specificity,
            f1: m.f1,
        });
        reports.push((name.clone(), report));
    }
    let outcome = Fig6Outcome {
        train_scans: train.scans.len(),
        test_scans: test.scans.len(),
        test_slices: test.slice_count(),
        slice_accuracy: slice_accuracy(&test)?,
        grid_lambda: search.lambda,
        methods,
    };
    Ok(Fig6Run { train, test, predictions, reports, outcome })
}
