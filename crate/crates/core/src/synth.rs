//! Seeded synthetic confidence maps and feature tables, and the
//! subset-enumeration fusion oracle.
//!
//! Each scan has a true class and a confuser class. A slice is informative
//! with probability `informative_fraction`; informative slices draw a
//! Dirichlet vector concentrated on the true class, the rest draw a
//! flatter vector tilted toward the confuser. Slice counts follow
//! `min + Binomial(max - min, q)` with `q` chosen to hit `mean_slices`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::confmap::{argmax, ConfidenceVector, Dataset, LabelSpace, ScanRecord, SliceRecord, ICH_CLASSES};
use crate::error::{Error, Result};
use crate::featsel::{FeatureTable, SampleId};
use crate::fusion::{solve_lambda, FusedScan, TieBreak};
use crate::seed;

/// Largest scan the oracle enumerates by default.
pub const ORACLE_MAX_SLICES: usize = 12;
/// Hard ceiling on the enumeration size.
pub const ORACLE_HARD_LIMIT: usize = 22;
/// Allowed deviation of `μ(S)` from one.
pub const ORACLE_NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub classes: Vec<String>,
    /// Number of scans (or feature rows) per class.
    pub class_counts: Vec<usize>,
    pub min_slices: usize,
    pub max_slices: usize,
    pub mean_slices: f64,
    /// Probability that a slice carries signal for the true class.
    pub informative_fraction: f64,
    /// Dirichlet mass on the true class of an informative slice.
    pub confident_concentration: f64,
    /// Dirichlet mass on every class of an ambiguous slice.
    pub ambiguous_concentration: f64,
    /// Extra Dirichlet mass on the confuser class of an ambiguous slice.
    pub confuser_bias: f64,
    pub feature_dim: usize,
    pub informative_features: usize,
    /// Distance of class means from the origin in the informative subspace.
    pub class_shift: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            classes: ICH_CLASSES.iter().map(|s| s.to_string()).collect(),
            class_counts: vec![267, 547, 440, 411, 282],
            min_slices: 4,
            max_slices: 30,
            mean_slices: 19.0,
            informative_fraction: 0.2,
            confident_concentration: 4.0,
            ambiguous_concentration: 6.0,
            confuser_bias: 1.0,
            feature_dim: 20,
            informative_features: 2,
            class_shift: 3.0,
        }
    }
}

impl SynthConfig {
    /// The desk-scale fusion comparison: a fifth of the default class
    /// counts per split.
    pub fn fig6() -> Self {
        Self { class_counts: vec![53, 109, 88, 82, 56], ..Self::default() }
    }

    pub fn label_space(&self) -> Result<LabelSpace> {
        LabelSpace::new(self.classes.iter().cloned())
    }

    pub fn total(&self) -> usize {
        self.class_counts.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.label_space()?;
        if self.class_counts.len() != self.classes.len() {
            return bad(format!("{} class counts for {} classes", self.class_counts.len(), self.classes.len()));
        }
        if self.class_counts.contains(&0) {
            return bad("class counts must be >= 1".into());
        }
        if self.min_slices == 0 || self.min_slices > self.max_slices {
            return bad("need 1 <= min_slices <= max_slices".into());
        }
        if !(self.mean_slices >= self.min_slices as f64 && self.mean_slices <= self.max_slices as f64) {
            return bad("mean_slices must lie between min_slices and max_slices".into());
        }
        if !(0.0..=1.0).contains(&self.informative_fraction) {
            return bad("informative_fraction must lie in [0,1]".into());
        }
        for (name, v) in [
            ("confident_concentration", self.confident_concentration),
            ("ambiguous_concentration", self.ambiguous_concentration),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0"));
            }
        }
        if !(self.confuser_bias >= 0.0 && self.confuser_bias.is_finite()) {
            return bad("confuser_bias must be >= 0".into());
        }
        if self.feature_dim == 0 || self.informative_features > self.feature_dim {
            return bad("need 0 <= informative_features <= feature_dim and feature_dim >= 1".into());
        }
        if !self.class_shift.is_finite() {
            return bad("class_shift must be finite".into());
        }
        Ok(())
    }

    /// Class labels in a seeded random order.
    fn shuffled_labels(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut labels: Vec<usize> =
            self.class_counts.iter().enumerate().flat_map(|(k, n)| std::iter::repeat_n(k, *n)).collect();
        labels.shuffle(rng);
        labels
    }
}

fn dirichlet(alpha: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = alpha
        .iter()
        .map(|a| Gamma::new(*a, 1.0).expect("positive shape").sample(rng).max(f64::MIN_POSITIVE))
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn slice_count(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> usize {
    let span = cfg.max_slices - cfg.min_slices;
    if span == 0 {
        return cfg.min_slices;
    }
    let q = ((cfg.mean_slices - cfg.min_slices as f64) / span as f64).clamp(0.0, 1.0);
    cfg.min_slices + Binomial::new(span as u64, q).expect("valid binomial").sample(rng) as usize
}

/// Labeled scans of slice confidence vectors; identical for identical configs.
pub fn generate_confidence_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let c = cfg.classes.len();
    let mut rng = seed::rng(cfg.seed, "synth/confidence");
    let labels = cfg.shuffled_labels(&mut rng);
    let mut scans = Vec::with_capacity(labels.len());
    for (i, y) in labels.into_iter().enumerate() {
        let confuser = (y + 1 + rng.random_range(0..c - 1)) % c;
        let n = slice_count(cfg, &mut rng);
        let slices = (0..n)
            .map(|j| {
                let mut alpha = vec![1.0; c];
                if rng.random::<f64>() < cfg.informative_fraction {
                    alpha[y] += cfg.confident_concentration;
                } else {
                    alpha.iter_mut().for_each(|a| *a = cfg.ambiguous_concentration);
                    alpha[confuser] += cfg.confuser_bias;
                }
                SliceRecord::new(format!("{j:02}"), ConfidenceVector::from_raw(dirichlet(&alpha, &mut rng)))
            })
            .collect();
        scans.push(ScanRecord::new(format!("scan{i:05}"), slices, Some(y)));
    }
    Ok(Dataset::new(cfg.label_space()?, scans))
}

/// Labeled Gaussian feature rows. The first `informative_features` columns
/// carry the class signal: class `k` is centred at `class_shift` times a
/// point spread evenly around the unit circle; further informative columns
/// repeat the pattern at higher angular frequencies. All other columns are standard normal noise.
pub fn generate_feature_dataset(cfg: &SynthConfig) -> Result<FeatureTable> {
    cfg.validate()?;
    let c = cfg.classes.len();
    let d = cfg.feature_dim;
    let m = cfg.informative_features;
    let mut rng = seed::rng(cfg.seed, "synth/features");
    let centres: Vec<Vec<f64>> = (0..c)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / c as f64;
            (0..m)
                .map(|j| {
                    let harmonic = (j / 2 + 1) as f64;
                    if j % 2 == 0 { (harmonic * angle).cos() } else { (harmonic * angle).sin() }
                })
                .map(|v| v * cfg.class_shift)
                .collect()
        })
        .collect();
    let labels = cfg.shuffled_labels(&mut rng);
    let mut data = Vec::with_capacity(labels.len() * d);
    for y in &labels {
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            data.push(centres[*y].get(j).map_or(noise, |c| c + noise));
        }
    }
    let ids = (0..labels.len()).map(|i| SampleId::new(format!("row{i:05}"), "")).collect();
    let names = (0..d).map(|j| format!("f{j:02}")).collect();
    FeatureTable::new(ids, names, data, Some(labels))
}

/// Outcome of the enumeration oracle for one scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleFusion {
    pub fused: FusedScan,
    /// `μ(S)` of the enumerated measure.
    pub full_measure: f64,
}

/// Choquet fusion from first principles: the λ-measure of every subset is
/// built by pairwise composition `μ(A ∪ B) = μ(A) + μ(B) + λ μ(A) μ(B)`,
/// checked for monotonicity and `μ(S) = 1`, and each class is integrated by
/// the level-set sum `Σⱼ (vⱼ - vⱼ₋₁) μ({s : P(s) ≥ vⱼ})` over its distinct
/// values.
pub fn brute_force_fuse(scan: &ScanRecord) -> Result<FusedScan> {
    brute_force_fuse_limited(scan, ORACLE_MAX_SLICES).map(|o| o.fused)
}

/// [`brute_force_fuse`] with a caller-chosen size limit (at most
/// [`ORACLE_HARD_LIMIT`]).
pub fn brute_force_fuse_limited(scan: &ScanRecord, max_slices: usize) -> Result<OracleFusion> {
    let n = scan.len();
    let limit = max_slices.min(ORACLE_HARD_LIMIT);
    if n == 0 {
        return Err(Error::InvalidInput(format!("scan `{}` has no slices", scan.scan_id)));
    }
    if n > limit {
        return Err(Error::Oracle(format!("scan `{}` has {n} slices; enumeration limit is {limit}", scan.scan_id)));
    }
    if n == 1 {
        return Ok(OracleFusion { fused: FusedScan::identity(scan, TieBreak::LowestIndex), full_measure: 1.0 });
    }
    let g: Vec<f64> = scan.slices.iter().map(|s| s.confidence.max()).collect();
    let lambda = solve_lambda(&g)?;
    let full = (1usize << n) - 1;
    let mut mu = vec![0.0; full + 1];
    for set in 1..=full {
        let low = set.trailing_zeros() as usize;
        let rest = set & (set - 1);
        let (a, b) = (g[low], mu[rest]);
        mu[set] = a + b + lambda * a * b;
    }
    for set in 0..full {
        for i in (0..n).filter(|i| set & (1 << i) == 0) {
            let (small, big) = (mu[set], mu[set | (1 << i)]);
            if big < small - 1e-12 * small.abs().max(1.0) {
                return Err(Error::Oracle(format!(
                    "scan `{}`: measure not monotone ({big} < {small})",
                    scan.scan_id
                )));
            }
        }
    }
    if (mu[full] - 1.0).abs() > ORACLE_NORMALIZATION_TOLERANCE {
        return Err(Error::Oracle(format!("scan `{}`: μ(S) = {} differs from 1", scan.scan_id, mu[full])));
    }
    let c = scan.class_count();
    let mut values = Vec::with_capacity(c);
    for k in 0..c {
        let column: Vec<f64> = scan.slices.iter().map(|s| s.confidence.get(k)).collect();
        let mut levels = column.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut prev = 0.0;
        let mut acc = 0.0;
        for v in levels {
            let set = column.iter().enumerate().filter(|(_, p)| **p >= v).fold(0usize, |s, (i, _)| s | (1 << i));
            acc += (v - prev) * mu[set];
            prev = v;
        }
        values.push(acc);
    }
    Ok(OracleFusion {
        fused: FusedScan {
            scan_id: scan.scan_id.clone(),
            decision: argmax(&values),
            values,
            lambda: Some(lambda),
            orders: Vec::new(),
            full_measure: mu[full],
        },
        full_measure: mu[full],
    })
}

/// Accuracy of per-slice argmax against the scan label.
pub fn slice_accuracy(d: &Dataset) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for s in &d.scans {
        let y = s.true_label.ok_or_else(|| Error::MissingLabels(format!("scan `{}`", s.scan_id)))?;
        hits += s.vectors().filter(|v| argmax(v) == y).count();
        total += s.len();
    }
    if total == 0 {
        return Err(Error::InvalidInput("no slices".into()));
    }
    Ok(hits as f64 / total as f64)
}
