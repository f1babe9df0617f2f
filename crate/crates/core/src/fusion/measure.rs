//! Slice densities and the Sugeno λ-measure built from them.

use serde::{Deserialize, Serialize};

use crate::confmap::ConfidenceVector;
use crate::error::{Error, Result};

/// `|Σg - 1|` below which λ is taken to be zero.
pub const ADDITIVE_TOLERANCE: f64 = 1e-12;

/// Ambiguity score and fuzzy density of one slice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceWeight {
    /// `1 - max_k p_k`.
    pub entropy: f64,
    /// `max_k p_k`.
    pub density: f64,
}

/// Density of a slice from its confidence vector: the largest class
/// probability, so confident slices weigh more.
pub fn entropy_weight(v: &ConfidenceVector) -> SliceWeight {
    let density = v.max();
    SliceWeight { entropy: 1.0 - density, density }
}

/// `∏(1 + λ gᵢ) - (1 + λ)`.
pub fn normalization_residual(g: &[f64], lambda: f64) -> f64 {
    g.iter().map(|gi| 1.0 + lambda * gi).product::<f64>() - (1.0 + lambda)
}

/// Solves `1 + λ = ∏(1 + λ gᵢ)` for the non-trivial root.
///
/// The root lies in `(-1, 0)` when `Σg > 1`, is `0` when `Σg = 1` and lies in
/// `(0, ∞)` when `Σg < 1`. It is bracketed and bisected down to adjacent
/// floats. A density of exactly one with `Σg > 1` makes `λ = -1` the root of
/// the limiting equation, and that value is returned.
pub fn solve_lambda(g: &[f64]) -> Result<f64> {
    if g.is_empty() {
        return Err(Error::DegenerateDensities("no densities".into()));
    }
    if let Some(bad) = g.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::DegenerateDensities(format!("density {bad} outside [0,1]")));
    }
    if g.iter().all(|v| *v == 0.0) {
        return Err(Error::DegenerateDensities("all densities are zero".into()));
    }
    if g.len() == 1 {
        return if (g[0] - 1.0).abs() <= ADDITIVE_TOLERANCE { Ok(0.0) } else { Err(Error::SingleSliceMeasure(g[0])) };
    }
    let sum: f64 = g.iter().sum();
    if (sum - 1.0).abs() <= ADDITIVE_TOLERANCE {
        return Ok(0.0);
    }
    if g.iter().filter(|v| **v > 0.0).count() < 2 {
        return Err(Error::DegenerateDensities(format!("only one positive density and Σg = {sum}")));
    }
    if sum > 1.0 {
        if g.iter().any(|v| *v >= 1.0) {
            return Ok(-1.0);
        }
        // residual > 0 left of the root, < 0 between the root and 0
        Ok(bisect(g, -1.0, 0.0, true))
    } else {
        // residual < 0 between 0 and the root, > 0 beyond it
        let mut hi = 1.0;
        while normalization_residual(g, hi) <= 0.0 {
            hi *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(Error::DegenerateDensities(format!("λ root unbounded for Σg = {sum}")));
            }
        }
        Ok(bisect(g, 0.0, hi, false))
    }
}

/// Bisection on the open bracket `(lo, hi)`. `positive_left` says which side
/// of the root has a positive residual.
fn bisect(g: &[f64], mut lo: f64, mut hi: f64, positive_left: bool) -> f64 {
    for _ in 0..2200 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        let r = normalization_residual(g, mid);
        if (r > 0.0) == positive_left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // both ends straddle the root; an end on the trivial root is excluded
    let candidates = [lo, hi].into_iter().filter(|v| *v != 0.0 && *v != -1.0);
    candidates
        .min_by(|a, b| normalization_residual(g, *a).abs().total_cmp(&normalization_residual(g, *b).abs()))
        .unwrap_or(lo)
}

/// Measures of the tail sets `A_i = {s_i, …, s_n}` of densities listed in
/// sort order, via `μ(A_n) = g_n` and `μ(A_i) = g_i + μ(A_{i+1}) + λ g_i μ(A_{i+1})`.
///
/// The result is indexed like `g` (zero-based): `out[0] = μ(A_1)`.
pub fn tail_measures(g: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let mut next = 0.0;
    for i in (0..g.len()).rev() {
        next = g[i] + next + lambda * g[i] * next;
        out[i] = next;
    }
    out
}

/// `μ(A_start)` for a zero-based `start`.
pub fn subset_measure(g: &[f64], lambda: f64, start: usize) -> Result<f64> {
    if start >= g.len() {
        return Err(Error::IndexOutOfRange { index: start, len: g.len() });
    }
    Ok(tail_measures(&g[start..], lambda)[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    /// Solved from the normalization identity per scan.
    Exact,
    /// Fixed hyperparameter, typically from a grid search.
    Grid,
}

/// Densities of one scan together with the λ they are combined under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyDensities {
    pub g: Vec<f64>,
    pub lambda: f64,
    pub source: LambdaSource,
    /// Whether tail measures are divided by `μ(A_1)`.
    pub normalized: bool,
}

impl FuzzyDensities {
    pub fn exact(g: Vec<f64>) -> Result<Self> {
        let lambda = solve_lambda(&g)?;
        Ok(Self { g, lambda, source: LambdaSource::Exact, normalized: false })
    }

    pub fn with_lambda(g: Vec<f64>, lambda: f64, normalized: bool) -> Result<Self> {
        if !(lambda > -1.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("λ = {lambda} outside (-1, ∞)")));
        }
        if let Some(bad) = g.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::DegenerateDensities(format!("density {bad} outside [0,1]")));
        }
        Ok(Self { g, lambda, source: LambdaSource::Grid, normalized })
    }

    pub fn residual(&self) -> f64 {
        normalization_residual(&self.g, self.lambda)
    }
}
