use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{entropy_weight, solve_lambda, tail_measures};
use crate::confmap::{Dataset, ScanRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// λ solved per scan from its densities.
    #[default]
    Exact,
    /// One λ for all scans, taken from [`FusionConfig::lambda`].
    Grid,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortMode {
    /// One ascending order by each slice's maximum confidence, shared by every class.
    #[default]
    Density,
    /// Per-class ascending order of the integrand (the textbook Choquet integral).
    Classical,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    HighestIndex,
}

impl TieBreak {
    pub fn argmax(self, values: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in values.iter().enumerate().skip(1) {
            let better = match self {
                TieBreak::LowestIndex => *v > values[best],
                TieBreak::HighestIndex => *v >= values[best],
            };
            if better {
                best = i;
            }
        }
        best
    }
}

/// Candidate λ values `lo, lo + step, …, hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { lo: -0.99, hi: -0.01, step: 0.01 }
    }
}

impl Grid {
    pub fn single(lambda: f64) -> Self {
        Self { lo: lambda, hi: lambda, step: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig("grid step must be > 0".into()));
        }
        if !(self.lo > -1.0 && self.hi < 0.0 && self.lo <= self.hi) {
            return Err(Error::InvalidConfig(format!(
                "grid [{}, {}] must lie inside (-1, 0) with lo <= hi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).filter(|l| *l <= self.hi + 1e-12).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    pub measure: MeasureMode,
    /// λ used in grid mode.
    pub lambda: Option<f64>,
    pub grid: Grid,
    pub sort: SortMode,
    /// Divide tail measures by `μ(A_1)` before integrating.
    pub normalize: bool,
    pub tie_break: TieBreak,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            measure: MeasureMode::Exact,
            lambda: None,
            grid: Grid::default(),
            sort: SortMode::Density,
            normalize: true,
            tie_break: TieBreak::LowestIndex,
        }
    }
}

impl FusionConfig {
    pub fn classical() -> Self {
        Self { sort: SortMode::Classical, ..Self::default() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { measure: MeasureMode::Grid, lambda: Some(lambda), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.measure == MeasureMode::Grid {
            match self.lambda {
                Some(l) if l > -1.0 && l.is_finite() => {}
                Some(l) => return Err(Error::InvalidConfig(format!("λ = {l} outside (-1, ∞)"))),
                None => return Err(Error::InvalidConfig("grid mode needs a λ".into())),
            }
        }
        Ok(())
    }
}

/// Scan-level fusion result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedScan {
    pub scan_id: String,
    /// Fused value per class.
    pub values: Vec<f64>,
    pub decision: usize,
    /// λ used; `None` when no measure was involved.
    pub lambda: Option<f64>,
    /// Slice order (ascending) used for each class.
    pub orders: Vec<Vec<usize>>,
    /// `μ(A_1)` before any normalization.
    pub full_measure: f64,
}

impl FusedScan {
    pub(crate) fn identity(scan: &ScanRecord, tie_break: TieBreak) -> Self {
        let p = scan.slices[0].confidence.as_slice().to_vec();
        let c = p.len();
        Self {
            scan_id: scan.scan_id.clone(),
            decision: tie_break.argmax(&p),
            values: p,
            lambda: None,
            orders: vec![vec![0]; c],
            full_measure: 1.0,
        }
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Ascending order by density. Equal densities fall back to comparing the
/// vectors themselves, so the order never depends on input order.
fn density_order(scan: &ScanRecord, g: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|a, b| {
        g[*a].total_cmp(&g[*b])
            .then_with(|| lexicographic(scan.slices[*a].confidence.as_slice(), scan.slices[*b].confidence.as_slice()))
    });
    order
}

fn integrate(values: impl Iterator<Item = f64>, tails: &[f64], norm: f64) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (v, mu) in values.zip(tails) {
        acc += (v - prev) * (mu / norm);
        prev = v;
    }
    acc.max(0.0)
}

/// Choquet integral of each class's slice probabilities against the
/// λ-measure generated by the slice densities, then argmax.
///
/// `F(c) = Σᵢ (P(s₍ᵢ₎, c) - P(s₍ᵢ₋₁₎, c)) · μ(A₍ᵢ₎)` with `P(s₍₀₎, c) = 0`
/// and `A₍ᵢ₎` the slices from position `i` of the ascending order onward.
/// A single-slice scan returns its own vector.
pub fn choquet_fuse(scan: &ScanRecord, cfg: &FusionConfig) -> Result<FusedScan> {
    let n = scan.len();
    if n == 0 {
        return Err(Error::InvalidInput(format!("scan `{}` has no slices", scan.scan_id)));
    }
    if n == 1 {
        return Ok(FusedScan::identity(scan, cfg.tie_break));
    }
    let c = scan.class_count();
    let g: Vec<f64> = scan.slices.iter().map(|s| entropy_weight(&s.confidence).density).collect();
    let lambda = match cfg.measure {
        MeasureMode::Exact => solve_lambda(&g)?,
        MeasureMode::Grid => cfg.lambda.ok_or_else(|| Error::InvalidConfig("grid mode needs a λ".into()))?,
    };
    let base_order = density_order(scan, &g);
    let base_g: Vec<f64> = base_order.iter().map(|i| g[*i]).collect();
    let base_tails = tail_measures(&base_g, lambda);
    let full_measure = base_tails[0];
    let norm = if cfg.normalize && full_measure > 0.0 { full_measure } else { 1.0 };

    let p = |slice: usize, class: usize| scan.slices[slice].confidence.get(class);
    let (values, orders) = match cfg.sort {
        SortMode::Density => {
            let values = (0..c).map(|k| integrate(base_order.iter().map(|i| p(*i, k)), &base_tails, norm)).collect();
            (values, vec![base_order.clone(); c])
        }
        SortMode::Classical => {
            let mut values = Vec::with_capacity(c);
            let mut orders = Vec::with_capacity(c);
            for k in 0..c {
                let mut order = base_order.clone();
                order.sort_by(|a, b| p(*a, k).total_cmp(&p(*b, k)));
                let gk: Vec<f64> = order.iter().map(|i| g[*i]).collect();
                let tails = tail_measures(&gk, lambda);
                values.push(integrate(order.iter().map(|i| p(*i, k)), &tails, norm));
                orders.push(order);
            }
            (values, orders)
        }
    };
    Ok(FusedScan {
        scan_id: scan.scan_id.clone(),
        decision: cfg.tie_break.argmax(&values),
        values,
        lambda: Some(lambda),
        orders,
        full_measure,
    })
}

/// Fuses every scan of a dataset in parallel, preserving order.
pub fn fuse_dataset(d: &Dataset, cfg: &FusionConfig) -> Result<Vec<FusedScan>> {
    d.scans.par_iter().map(|s| choquet_fuse(s, cfg)).collect()
}

/// Outcome of a λ grid search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub lambda: f64,
    pub accuracy: f64,
    /// `(λ, accuracy)` for every grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Scan-level accuracy of grid-mode fusion at one λ.
pub fn accuracy_at(validation: &Dataset, cfg: &FusionConfig, lambda: f64) -> Result<f64> {
    let cfg = cfg.with_lambda(lambda);
    let hits = validation
        .scans
        .iter()
        .map(|s| choquet_fuse(s, &cfg).map(|f| Some(f.decision) == s.true_label))
        .collect::<Result<Vec<bool>>>()?;
    Ok(hits.iter().filter(|h| **h).count() as f64 / hits.len() as f64)
}

/// Picks the grid λ with the best scan-level accuracy on labeled scans; ties
/// go to the λ closest to zero.
pub fn grid_search_lambda(validation: &Dataset, cfg: &FusionConfig) -> Result<GridSearch> {
    cfg.grid.validate()?;
    if !validation.is_fully_labeled() {
        return Err(Error::MissingLabels("grid search needs a labeled validation set".into()));
    }
    let points = cfg.grid.points();
    let curve: Vec<(f64, f64)> = points
        .par_iter()
        .map(|l| accuracy_at(validation, cfg, *l).map(|a| (*l, a)))
        .collect::<Result<_>>()?;
    let (lambda, accuracy) = curve
        .iter()
        .copied()
        .reduce(|best, cur| {
            if cur.1 > best.1 || (cur.1 == best.1 && cur.0.abs() < best.0.abs()) {
                cur
            } else {
                best
            }
        })
        .ok_or_else(|| Error::InvalidConfig("empty λ grid".into()))?;
    Ok(GridSearch { lambda, accuracy, curve })
}
