use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::table::FeatureTable;
use crate::error::{Error, Result};
use crate::seed;

/// Largest feature count for exact coalition enumeration.
pub const MAX_EXACT_FEATURES: usize = 15;

/// Share a feature must exceed to be kept.
pub const DEFAULT_THRESHOLD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ShapleyMode {
    /// All `2^d` coalitions.
    Exact,
    /// Average marginal contributions over random feature orderings.
    MonteCarlo { permutations: usize },
}

/// Shapley values of `model` at `x`, with absent features set to `baseline`.
///
/// Returns `d` rows, each holding one value per model output.
pub fn shapley_values<F, R>(model: &F, x: &[f64], baseline: &[f64], mode: ShapleyMode, rng: &mut R) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    R: Rng,
{
    let d = x.len();
    if baseline.len() != d {
        return Err(Error::DimensionMismatch { expected: d, actual: baseline.len() });
    }
    match mode {
        ShapleyMode::Exact => exact(model, x, baseline),
        ShapleyMode::MonteCarlo { permutations } => {
            if permutations == 0 {
                return Err(Error::InvalidConfig("Monte-Carlo Shapley needs at least one permutation".into()));
            }
            Ok(permutation_sampling(model, x, baseline, permutations, rng))
        }
    }
}

fn exact<F: Fn(&[f64]) -> Vec<f64>>(model: &F, x: &[f64], baseline: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::InvalidConfig(format!("exact Shapley supports d <= {MAX_EXACT_FEATURES}, got {d}")));
    }
    let mut z = baseline.to_vec();
    let values: Vec<Vec<f64>> = (0..1usize << d)
        .map(|mask| {
            for j in 0..d {
                z[j] = if mask >> j & 1 == 1 { x[j] } else { baseline[j] };
            }
            model(&z)
        })
        .collect();
    let outputs = values[0].len();
    // |S|! (d - |S| - 1)! / d!
    let fact: Vec<f64> = (0..=d).scan(1.0, |acc, i| {
        if i > 0 {
            *acc *= i as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight: Vec<f64> = (0..d).map(|s| fact[s] * fact[d - s - 1] / fact[d]).collect();
    let mut phi = vec![vec![0.0; outputs]; d];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1usize << i;
        for mask in (0..1usize << d).filter(|m| m & bit == 0) {
            let w = weight[mask.count_ones() as usize];
            for (o, acc) in phi_i.iter_mut().enumerate() {
                *acc += w * (values[mask | bit][o] - values[mask][o]);
            }
        }
    }
    Ok(phi)
}

fn permutation_sampling<F, R>(model: &F, x: &[f64], baseline: &[f64], permutations: usize, rng: &mut R) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    R: Rng,
{
    let d = x.len();
    let base_value = model(baseline);
    let mut phi = vec![vec![0.0; base_value.len()]; d];
    let mut order: Vec<usize> = (0..d).collect();
    for _ in 0..permutations {
        order.shuffle(rng);
        let mut z = baseline.to_vec();
        let mut prev = base_value.clone();
        for &j in &order {
            z[j] = x[j];
            let cur = model(&z);
            for (acc, (c, p)) in phi[j].iter_mut().zip(cur.iter().zip(&prev)) {
                *acc += c - p;
            }
            prev = cur;
        }
    }
    let scale = 1.0 / permutations as f64;
    phi.iter_mut().flatten().for_each(|v| *v *= scale);
    phi
}

/// Mean absolute Shapley value per feature and the derived selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    /// Mean over evaluated rows of `Σ_outputs |φ|`.
    pub scores: Vec<f64>,
    /// Scores normalized to sum to one.
    pub shares: Vec<f64>,
    pub threshold: f64,
    /// Indices of features whose share exceeds `threshold`, in column order.
    pub selected: Vec<usize>,
    pub selected_names: Vec<String>,
}

impl ImportanceReport {
    /// Builds a report from raw scores, normalizing them into shares.
    pub fn from_scores(feature_names: Vec<String>, scores: Vec<f64>, threshold: f64) -> Result<Self> {
        if feature_names.len() != scores.len() || scores.is_empty() {
            return Err(Error::DimensionMismatch { expected: feature_names.len(), actual: scores.len() });
        }
        if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidInput("importance scores must be finite and nonnegative".into()));
        }
        let total: f64 = scores.iter().sum();
        let shares = if total > 0.0 {
            scores.iter().map(|s| s / total).collect()
        } else {
            log::warn!("model output does not depend on any feature; using uniform shares");
            vec![1.0 / scores.len() as f64; scores.len()]
        };
        let mut r =
            Self { feature_names, scores, shares, threshold, selected: Vec::new(), selected_names: Vec::new() };
        r.reselect(threshold);
        Ok(r)
    }

    pub fn reselect(&mut self, threshold: f64) {
        self.threshold = threshold;
        self.selected = select_features(self, threshold);
        self.selected_names = self.selected.iter().map(|i| self.feature_names[*i].clone()).collect();
    }

    /// Feature indices by descending share (stable on ties).
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.shares.len()).collect();
        idx.sort_by(|a, b| self.shares[*b].total_cmp(&self.shares[*a]));
        idx
    }
}

/// Features whose share is strictly greater than `threshold`, in column order.
pub fn select_features(r: &ImportanceReport, threshold: f64) -> Vec<usize> {
    r.shares.iter().enumerate().filter(|(_, s)| **s > threshold).map(|(i, _)| i).collect()
}

/// Shapley importance of every feature of `t` under `model`.
///
/// Absent features take the column means of `background`. Rows are evaluated
/// in parallel; the Monte-Carlo stream of row `i` is derived from `(seed, i)`
/// so results do not depend on scheduling.
pub fn shapley_importance<F>(
    model: &F,
    t: &FeatureTable,
    background: &FeatureTable,
    mode: ShapleyMode,
    seed: u64,
) -> Result<ImportanceReport>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    if background.n_samples() == 0 {
        return Err(Error::InvalidInput("empty background table".into()));
    }
    if background.n_features() != t.n_features() {
        return Err(Error::DimensionMismatch { expected: t.n_features(), actual: background.n_features() });
    }
    if t.n_samples() == 0 {
        return Err(Error::InvalidInput("no rows to explain".into()));
    }
    let baseline = background.column_means();
    let per_row: Vec<Vec<f64>> = (0..t.n_samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::rng_indexed(seed, "shapley", i as u64);
            shapley_values(model, t.row(i), &baseline, mode, &mut rng)
                .map(|phi| phi.iter().map(|outs| outs.iter().map(|v| v.abs()).sum()).collect())
        })
        .collect::<Result<_>>()?;
    let n = per_row.len() as f64;
    let scores = (0..t.n_features()).map(|j| per_row.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    ImportanceReport::from_scores(t.names().to_vec(), scores, DEFAULT_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn additive_model_gives_inputs() {
        let f = |x: &[f64]| vec![x.iter().sum()];
        let phi = shapley_values(&f, &[1.5, -2.0, 4.0], &[0.0; 3], ShapleyMode::Exact, &mut rng()).unwrap();
        assert_eq!(phi, vec![vec![1.5], vec![-2.0], vec![4.0]]);
    }

    #[test]
    fn symmetric_features_share_equally() {
        let f = |x: &[f64]| vec![x[0] + x[1]];
        let phi = shapley_values(&f, &[3.0, 3.0], &[0.0, 0.0], ShapleyMode::Exact, &mut rng()).unwrap();
        assert_eq!(phi[0], phi[1]);
    }

    #[test]
    fn product_model_coalition_values() {
        // v(S) over S ⊆ {1,2,3}: only {1,2} and {1,2,3} are nonzero (= 1).
        let f = |x: &[f64]| vec![x[0] * x[1]];
        let phi = shapley_values(&f, &[1.0, 1.0, 5.0], &[0.0; 3], ShapleyMode::Exact, &mut rng()).unwrap();
        assert!((phi[0][0] - 0.5).abs() < 1e-15);
        assert!((phi[1][0] - 0.5).abs() < 1e-15);
        assert_eq!(phi[2][0], 0.0);
    }

    #[test]
    fn exact_rejects_wide_inputs() {
        let f = |x: &[f64]| vec![x[0]];
        let x = vec![0.0; 16];
        assert!(shapley_values(&f, &x, &x, ShapleyMode::Exact, &mut rng()).is_err());
        assert!(shapley_values(&f, &x, &x, ShapleyMode::MonteCarlo { permutations: 0 }, &mut rng()).is_err());
    }

    #[test]
    fn select_is_strict() {
        let names: Vec<String> = (0..5).map(|i| format!("f{i}")).collect();
        let r = ImportanceReport::from_scores(names, vec![5.0, 3.0, 2.0, 0.0, 0.0], 0.01).unwrap();
        assert_eq!(r.selected, vec![0, 1, 2]);
        let names: Vec<String> = (0..100).map(|i| format!("f{i}")).collect();
        let r = ImportanceReport::from_scores(names, vec![1.0; 100], 0.01).unwrap();
        assert!(r.shares.iter().all(|s| *s == 0.01));
        assert!(r.selected.is_empty());
    }

    #[test]
    fn empty_background_is_an_error() {
        let t = FeatureTable::from_rows(&[vec![1.0]], None).unwrap();
        let bg = FeatureTable::from_rows(&[], None);
        // a zero-row table cannot even be built with zero features; build one with a name
        assert!(bg.is_err());
        let bg = FeatureTable::new(vec![], vec!["f0".into()], vec![], None).unwrap();
        let f = |x: &[f64]| vec![x[0]];
        assert!(shapley_importance(&f, &t, &bg, ShapleyMode::Exact, 0).is_err());
    }
}
