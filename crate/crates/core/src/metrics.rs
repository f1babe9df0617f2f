//! Evaluation: confusion matrices, macro-averaged one-vs-rest classification
//! metrics and likelihood-based fit statistics of probability predictions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::confmap::LabelSpace;
use crate::error::{Error, Result};

/// Floor applied to the argument of every logarithm.
pub const LOG_EPSILON: f64 = 1e-12;

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if c < 2 || counts.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidInput("confusion matrix must be square with C >= 2".into()));
        }
        Ok(Self { counts })
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), actual: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(Error::InvalidInput("no predictions".into()));
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (t, p) in y_true.iter().zip(y_pred) {
        if *t >= classes {
            return Err(Error::UnknownLabel(t.to_string()));
        }
        if *p >= classes {
            return Err(Error::UnknownLabel(p.to_string()));
        }
        counts[*t][*p] += 1;
    }
    ConfusionMatrix::from_counts(counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Precision,
    Sensitivity,
    Specificity,
    F1,
}

/// One-vs-rest counts and rates of one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
    /// `(class, metric)` pairs with a zero denominator, counted as 0.
    pub undefined: Vec<(usize, MetricName)>,
}

/// Macro averages (unweighted over classes) of one-vs-rest rates.
pub fn classification_metrics(m: &ConfusionMatrix) -> Result<ClassificationMetrics> {
    let n = m.total();
    if n == 0 {
        return Err(Error::InvalidInput("empty confusion matrix".into()));
    }
    let c = m.classes();
    let mut undefined = Vec::new();
    let ratio = |num: u64, den: u64, class: usize, name: MetricName, undefined: &mut Vec<_>| {
        if den == 0 {
            undefined.push((class, name));
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let mut per_class = Vec::with_capacity(c);
    for i in 0..c {
        let tp = m.counts[i][i];
        let fp: u64 = (0..c).filter(|r| *r != i).map(|r| m.counts[r][i]).sum();
        let fn_: u64 = (0..c).filter(|k| *k != i).map(|k| m.counts[i][k]).sum();
        let tn = n - tp - fp - fn_;
        let precision = ratio(tp, tp + fp, i, MetricName::Precision, &mut undefined);
        let sensitivity = ratio(tp, tp + fn_, i, MetricName::Sensitivity, &mut undefined);
        let specificity = ratio(tn, tn + fp, i, MetricName::Specificity, &mut undefined);
        let f1 = if precision + sensitivity > 0.0 {
            2.0 * precision * sensitivity / (precision + sensitivity)
        } else {
            undefined.push((i, MetricName::F1));
            0.0
        };
        per_class.push(ClassMetrics { tp, fp, fn_, tn, precision, sensitivity, specificity, f1 });
    }
    let macro_avg = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / c as f64;
    Ok(ClassificationMetrics {
        accuracy: m.trace() as f64 / n as f64,
        precision: macro_avg(|m| m.precision),
        sensitivity: macro_avg(|m| m.sensitivity),
        specificity: macro_avg(|m| m.specificity),
        f1: macro_avg(|m| m.f1),
        per_class,
        undefined,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LikelihoodForm {
    /// `Σᵢ ln p̂(i, yᵢ)`.
    #[default]
    Multiclass,
    /// `Σᵢ Σₖ [yᵢₖ ln p̂ᵢₖ + (1 - yᵢₖ) ln(1 - p̂ᵢₖ)]`.
    OneVsRest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitStatistics {
    pub form: LikelihoodForm,
    pub n: usize,
    /// Log-likelihood of the predictions.
    pub ll_model: f64,
    /// Log-likelihood of the class-frequency model.
    pub ll_null: f64,
    /// `1 - exp((LL₀ - LL_M) / N)`.
    pub r2_generalized: f64,
    /// `(LL₀ - LL_M) / LL₀`; 0 when `LL₀ = 0`.
    pub r2_entropy: f64,
    /// Root mean squared difference from the one-hot truth over all N·C cells.
    pub rase: f64,
    /// Mean absolute difference from the one-hot truth over all N·C cells.
    pub mad: f64,
}

fn ln_floor(p: f64) -> f64 {
    p.max(LOG_EPSILON).ln()
}

fn log_likelihood(y_true: &[usize], probs: &[Vec<f64>], form: LikelihoodForm) -> f64 {
    y_true
        .iter()
        .zip(probs)
        .map(|(y, p)| match form {
            LikelihoodForm::Multiclass => ln_floor(p[*y]),
            LikelihoodForm::OneVsRest => p
                .iter()
                .enumerate()
                .map(|(k, pk)| if k == *y { ln_floor(*pk) } else { ln_floor(1.0 - pk) })
                .sum(),
        })
        .sum()
}

/// Likelihood-based and distance-based fit of probability predictions.
pub fn fit_statistics(y_true: &[usize], probs: &[Vec<f64>], form: LikelihoodForm) -> Result<FitStatistics> {
    if y_true.is_empty() {
        return Err(Error::InvalidInput("no predictions".into()));
    }
    if y_true.len() != probs.len() {
        return Err(Error::DimensionMismatch { expected: y_true.len(), actual: probs.len() });
    }
    let c = probs[0].len();
    if c < 2 || probs.iter().any(|p| p.len() != c) {
        return Err(Error::InvalidInput("probability vectors must share a length >= 2".into()));
    }
    if let Some(y) = y_true.iter().find(|y| **y >= c) {
        return Err(Error::UnknownLabel(y.to_string()));
    }
    if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidInput("probabilities must lie in [0,1]".into()));
    }
    let n = y_true.len();
    let mut freq = vec![0.0; c];
    for y in y_true {
        freq[*y] += 1.0 / n as f64;
    }
    let null: Vec<Vec<f64>> = vec![freq; n];
    let ll_model = log_likelihood(y_true, probs, form);
    let ll_null = log_likelihood(y_true, &null, form);
    let r2_generalized = 1.0 - ((ll_null - ll_model) / n as f64).exp();
    let r2_entropy = if ll_null == 0.0 { 0.0 } else { (ll_null - ll_model) / ll_null };
    let mut sq = 0.0;
    let mut abs = 0.0;
    for (y, p) in y_true.iter().zip(probs) {
        for (k, pk) in p.iter().enumerate() {
            let e = pk - if k == *y { 1.0 } else { 0.0 };
            sq += e * e;
            abs += e.abs();
        }
    }
    let cells = (n * c) as f64;
    Ok(FitStatistics {
        form,
        n,
        ll_model,
        ll_null,
        r2_generalized,
        r2_entropy,
        rase: (sq / cells).sqrt(),
        mad: abs / cells,
    })
}

/// Everything reported for one prediction set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub n: usize,
    pub confusion: ConfusionMatrix,
    pub classification: ClassificationMetrics,
    pub fit: Option<FitStatistics>,
}

/// Evaluates decisions and, when given, the probability vectors behind them.
pub fn evaluate(
    labels: &LabelSpace,
    y_true: &[usize],
    y_pred: &[usize],
    probs: Option<&[Vec<f64>]>,
    form: LikelihoodForm,
) -> Result<EvalReport> {
    let confusion = confusion(y_true, y_pred, labels.len())?;
    let classification = classification_metrics(&confusion)?;
    let fit = probs.map(|p| fit_statistics(y_true, p, form)).transpose()?;
    Ok(EvalReport { classes: labels.classes().to_vec(), n: y_true.len(), confusion, classification, fit })
}

impl EvalReport {
    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let m = &self.classification;
        let _ = writeln!(s, "samples      {}", self.n);
        for (name, v) in [
            ("accuracy", m.accuracy),
            ("precision", m.precision),
            ("sensitivity", m.sensitivity),
            ("specificity", m.specificity),
            ("f1", m.f1),
        ] {
            let _ = writeln!(s, "{name:<12} {v:.4}");
        }
        if let Some(f) = &self.fit {
            for (name, v) in [
                ("r2_g", f.r2_generalized),
                ("r2_e", f.r2_entropy),
                ("rase", f.rase),
                ("mad", f.mad),
                ("ll", f.ll_model),
            ] {
                let _ = writeln!(s, "{name:<12} {v:.4}");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<8} {:>6} {:>6} {:>6} {:>6} {:>9} {:>11} {:>11} {:>6}",
            "class", "tp", "fp", "fn", "tn", "precision", "sensitivity", "specificity", "f1"
        );
        for (name, c) in self.classes.iter().zip(&m.per_class) {
            let _ = writeln!(
                s,
                "{:<8} {:>6} {:>6} {:>6} {:>6} {:>9.4} {:>11.4} {:>11.4} {:>6.4}",
                name, c.tp, c.fp, c.fn_, c.tn, c.precision, c.sensitivity, c.specificity, c.f1
            );
        }
        s
    }
}
