use serde::{Deserialize, Serialize};

use super::choquet::{FusedScan, TieBreak};
use crate::boostnet::{train_boost, BoostEnsemble, TrainConfig};
use crate::confmap::{argmax, Dataset, ScanRecord};
use crate::error::{Error, Result};
use crate::featsel::{FeatureTable, SampleId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Per-class mean of slice probabilities.
    Mean,
    /// One vote per slice for its argmax class.
    Majority,
    /// A network over per-class summary statistics of the scan.
    Learned,
}

/// Scan classifier over fixed-length summaries: per class the mean, max,
/// min and population standard deviation of the slice probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedFusion {
    pub ensemble: BoostEnsemble,
}

/// The `4·C` summary features of a scan, grouped by statistic.
pub fn scan_summary(scan: &ScanRecord) -> Vec<f64> {
    let c = scan.class_count();
    let n = scan.len() as f64;
    let mut mean = vec![0.0; c];
    let mut max = vec![f64::NEG_INFINITY; c];
    let mut min = vec![f64::INFINITY; c];
    for v in scan.vectors() {
        for k in 0..c {
            mean[k] += v[k] / n;
            max[k] = max[k].max(v[k]);
            min[k] = min[k].min(v[k]);
        }
    }
    let mut std = vec![0.0; c];
    for v in scan.vectors() {
        for k in 0..c {
            std[k] += (v[k] - mean[k]).powi(2) / n;
        }
    }
    std.iter_mut().for_each(|s| *s = s.sqrt());
    [mean, max, min, std].concat()
}

fn summary_names(classes: &[String]) -> Vec<String> {
    ["mean", "max", "min", "std"]
        .iter()
        .flat_map(|stat| classes.iter().map(move |c| format!("{stat}_{c}")))
        .collect()
}

/// Summary table of a dataset, one row per scan.
pub fn summary_table(d: &Dataset) -> Result<FeatureTable> {
    let ids = d.scans.iter().map(|s| SampleId::new(s.scan_id.clone(), "")).collect();
    let data = d.scans.iter().flat_map(scan_summary).collect();
    let labels = d.is_fully_labeled().then(|| d.scans.iter().map(|s| s.true_label.unwrap()).collect());
    FeatureTable::new(ids, summary_names(d.label_space.classes()), data, labels)
}

impl LearnedFusion {
    pub fn train(train: &Dataset, cfg: &TrainConfig) -> Result<Self> {
        if !train.is_fully_labeled() {
            return Err(Error::MissingLabels("learned fusion needs labeled scans".into()));
        }
        let table = summary_table(train)?;
        Ok(Self { ensemble: train_boost(&table, train.label_space.len(), cfg)? })
    }

    pub fn predict(&self, scan: &ScanRecord) -> Result<Vec<f64>> {
        Ok(self.ensemble.predict(&scan_summary(scan))?.into_inner())
    }

    pub fn to_json(&self) -> Result<String> {
        self.ensemble.to_json()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(Self { ensemble: BoostEnsemble::from_json(s)? })
    }
}

/// Non-fuzzy scan-level fusion used for comparison.
///
/// `Majority` reports vote fractions as its per-class values. Ties in every
/// mode go to the lowest class index.
pub fn fuse_baseline(scan: &ScanRecord, kind: BaselineKind, model: Option<&LearnedFusion>) -> Result<FusedScan> {
    if scan.is_empty() {
        return Err(Error::InvalidInput(format!("scan `{}` has no slices", scan.scan_id)));
    }
    let c = scan.class_count();
    let n = scan.len() as f64;
    let values = match kind {
        BaselineKind::Mean => {
            let mut m = vec![0.0; c];
            for v in scan.vectors() {
                m.iter_mut().zip(v).for_each(|(a, p)| *a += p);
            }
            m.iter_mut().for_each(|a| *a /= n);
            m
        }
        BaselineKind::Majority => {
            let mut votes = vec![0.0; c];
            for v in scan.vectors() {
                votes[argmax(v)] += 1.0;
            }
            votes.iter_mut().for_each(|a| *a /= n);
            votes
        }
        BaselineKind::Learned => {
            let model = model.ok_or_else(|| Error::InvalidConfig("learned fusion needs a trained model".into()))?;
            model.predict(scan)?
        }
    };
    Ok(FusedScan {
        scan_id: scan.scan_id.clone(),
        decision: TieBreak::LowestIndex.argmax(&values),
        values,
        lambda: None,
        orders: Vec::new(),
        full_measure: 1.0,
    })
}
