//! Boosted ensemble of small mixed-activation networks producing per-slice
//! confidence vectors.
//!
//! Each component is a two-hidden-layer perceptron whose hidden layers mix
//! sigmoid, identity and Gaussian radial units (15/5/15 then 10/0/10) over a
//! softmax output. Components are trained one after another on a weighted
//! cross-entropy with a squared-weight penalty; between rounds the sample
//! weights of misclassified rows are scaled up SAMME-style.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::confmap::{argmax, ConfidenceVector, Dataset, LabelSpace, ScanRecord, SliceRecord};
use crate::error::{Error, Result};
use crate::featsel::FeatureTable;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Identity,
    /// Gaussian `exp(-z²)` of the pre-activation.
    Radial,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
            Activation::Radial => (-z * z).exp(),
        }
    }

    /// Derivative at `z`, given `a = apply(z)`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
            Activation::Radial => -2.0 * z * a,
        }
    }
}

/// Unit counts of one hidden layer, laid out sigmoid, identity, radial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub sigmoid: usize,
    pub identity: usize,
    pub radial: usize,
}

impl LayerSpec {
    pub const FIRST: LayerSpec = LayerSpec { sigmoid: 15, identity: 5, radial: 15 };
    pub const SECOND: LayerSpec = LayerSpec { sigmoid: 10, identity: 0, radial: 10 };

    pub fn units(&self) -> usize {
        self.sigmoid + self.identity + self.radial
    }

    pub fn activations(&self) -> Vec<Activation> {
        let mut a = vec![Activation::Sigmoid; self.sigmoid];
        a.extend(std::iter::repeat_n(Activation::Identity, self.identity));
        a.extend(std::iter::repeat_n(Activation::Radial, self.radial));
        a
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub inputs: usize,
    pub hidden: Vec<LayerSpec>,
    pub outputs: usize,
}

impl Architecture {
    /// The component layout: 35 units (15 sigmoid, 5 identity, 15 radial),
    /// then 20 units (10 sigmoid, 10 radial), then a softmax over `outputs`.
    pub fn standard(inputs: usize, outputs: usize) -> Self {
        Self { inputs, hidden: vec![LayerSpec::FIRST, LayerSpec::SECOND], outputs }
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.inputs];
        w.extend(self.hidden.iter().map(LayerSpec::units));
        w.push(self.outputs);
        w
    }

    /// Offsets of each layer's weight block in the flat parameter vector.
    /// Layer `l` holds an `out × in` row-major weight block followed by `out`
    /// biases.
    fn offsets(&self) -> Vec<usize> {
        let w = self.widths();
        let mut off = vec![0];
        for l in 0..w.len() - 1 {
            off.push(off[l] + w[l + 1] * w[l] + w[l + 1]);
        }
        off
    }

    pub fn param_count(&self) -> usize {
        *self.offsets().last().unwrap()
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.outputs < 2 || self.hidden.iter().any(|h| h.units() == 0) {
            return Err(Error::InvalidConfig(format!("invalid architecture {self:?}")));
        }
        Ok(())
    }
}

/// One component network with a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentNet {
    arch: Architecture,
    params: Vec<f64>,
}

struct Trace {
    /// Pre-activations per layer after the input.
    zs: Vec<Vec<f64>>,
    /// Layer outputs; `acts[0]` is the input, the last entry the softmax.
    acts: Vec<Vec<f64>>,
}

impl ComponentNet {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let n = arch.param_count();
        Ok(Self { arch, params: vec![0.0; n] })
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.param_count() {
            return Err(Error::DimensionMismatch { expected: arch.param_count(), actual: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite network parameter".into()));
        }
        Ok(Self { arch, params })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let widths = net.arch.widths();
        let offsets = net.arch.offsets();
        for l in 0..widths.len() - 1 {
            let (fan_in, fan_out) = (widths[l], widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offsets[l]..offsets[l] + fan_in * fan_out] {
                *p = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let widths = self.arch.widths();
        let offsets = self.arch.offsets();
        let n_layers = widths.len() - 1;
        let mut zs = Vec::with_capacity(n_layers);
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        for l in 0..n_layers {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &self.params[offsets[l] + n_in * n_out..offsets[l + 1]];
            let input = &acts[l];
            let z: Vec<f64> = (0..n_out)
                .map(|j| b[j] + w[j * n_in..(j + 1) * n_in].iter().zip(input).map(|(wi, xi)| wi * xi).sum::<f64>())
                .collect();
            let a = if l + 1 < n_layers {
                let kinds = self.arch.hidden[l].activations();
                z.iter().zip(kinds).map(|(zj, k)| k.apply(*zj)).collect()
            } else {
                softmax(&z)
            };
            zs.push(z);
            acts.push(a);
        }
        Trace { zs, acts }
    }

    /// Raw softmax output without input checks.
    pub(crate) fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).acts.pop().unwrap()
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<ConfidenceVector> {
        if x.len() != self.arch.inputs {
            return Err(Error::DimensionMismatch { expected: self.arch.inputs, actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(ConfidenceVector::from_raw(self.probabilities(x)))
    }

    /// Sum of squared weights (biases excluded).
    fn weight_norm2(&self) -> f64 {
        let widths = self.arch.widths();
        let offsets = self.arch.offsets();
        (0..widths.len() - 1)
            .flat_map(|l| &self.params[offsets[l]..offsets[l] + widths[l] * widths[l + 1]])
            .map(|w| w * w)
            .sum()
    }

    /// Weighted cross-entropy plus `penalty · Σ w²` over the listed rows.
    pub fn loss(&self, batch: &Batch<'_>, penalty: f64) -> f64 {
        let ce: f64 = batch
            .indices()
            .map(|i| {
                let z = self.trace(batch.row(i)).zs.pop().unwrap();
                batch.multipliers[i] * (log_sum_exp(&z) - z[batch.labels[i]])
            })
            .sum();
        ce + penalty * self.weight_norm2()
    }

    /// Loss and its gradient with respect to the flat parameter vector.
    pub fn loss_and_gradient(&self, batch: &Batch<'_>, penalty: f64) -> (f64, Vec<f64>) {
        let widths = self.arch.widths();
        let offsets = self.arch.offsets();
        let n_layers = widths.len() - 1;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for i in batch.indices() {
            let m = batch.multipliers[i];
            if m == 0.0 {
                continue;
            }
            let y = batch.labels[i];
            let tr = self.trace(batch.row(i));
            let z_out = &tr.zs[n_layers - 1];
            loss += m * (log_sum_exp(z_out) - z_out[y]);
            let mut delta: Vec<f64> = tr.acts[n_layers].iter().map(|p| m * p).collect();
            delta[y] -= m;
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (widths[l], widths[l + 1]);
                let input = &tr.acts[l];
                let (gw, rest) = grad[offsets[l]..offsets[l + 1]].split_at_mut(n_in * n_out);
                for j in 0..n_out {
                    rest[j] += delta[j];
                    for (g, a) in gw[j * n_in..(j + 1) * n_in].iter_mut().zip(input) {
                        *g += delta[j] * a;
                    }
                }
                if l == 0 {
                    break;
                }
                let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
                let kinds = self.arch.hidden[l - 1].activations();
                delta = (0..n_in)
                    .map(|k| {
                        let back: f64 = (0..n_out).map(|j| w[j * n_in + k] * delta[j]).sum();
                        back * kinds[k].derivative(tr.zs[l - 1][k], tr.acts[l][k])
                    })
                    .collect();
            }
        }
        for l in 0..n_layers {
            let weights = offsets[l]..offsets[l] + widths[l] * widths[l + 1];
            for (g, w) in grad[weights.clone()].iter_mut().zip(&self.params[weights]) {
                *g += 2.0 * penalty * w;
            }
        }
        (loss + penalty * self.weight_norm2(), grad)
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Rows, labels and per-row loss multipliers for one gradient evaluation.
pub struct Batch<'a> {
    pub x: &'a [f64],
    pub width: usize,
    pub labels: &'a [usize],
    pub multipliers: &'a [f64],
    /// Subset of rows to use; all rows when `None`.
    pub rows: Option<&'a [usize]>,
}

impl Batch<'_> {
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.width..(i + 1) * self.width]
    }

    fn indices(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match self.rows {
            Some(r) => Box::new(r.iter().copied()),
            None => Box::new(0..self.labels.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Coefficient of the squared-weight penalty.
    pub penalty: f64,
    pub components: usize,
    /// Rows per gradient step; full batch when `None`.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.001, epochs: 150, penalty: 1e-4, components: 10, batch_size: None, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs == 0 || self.components == 0 {
            return Err(Error::InvalidConfig("epochs and components must be >= 1".into()));
        }
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(Error::InvalidConfig("penalty must be >= 0".into()));
        }
        if self.batch_size == Some(0) {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trains one component by gradient descent on the objective
/// `Σᵢ mᵢ·CE(xᵢ, yᵢ) + penalty·Σ w²`.
///
/// Full-batch mode takes one step per epoch. Mini-batch mode sweeps a fresh
/// shuffle each epoch; each step uses the batch's share of the penalty.
pub fn train_component(
    arch: Architecture,
    x: &[f64],
    labels: &[usize],
    multipliers: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ComponentNet> {
    let mut rng = seed::rng(seed, "component-init");
    let mut net = ComponentNet::random(arch, &mut rng)?;
    let n = labels.len();
    let width = net.arch.inputs;
    let batch_size = cfg.batch_size.unwrap_or(n).clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        if batch_size < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch_size) {
            let batch = Batch { x, width, labels, multipliers, rows: (batch_size < n).then_some(chunk) };
            let share = chunk.len() as f64 / n as f64;
            let (_, grad) = net.loss_and_gradient(&batch, cfg.penalty * share);
            for (p, g) in net.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
        }
    }
    if net.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("training diverged to non-finite parameters".into()));
    }
    Ok(net)
}

/// One boosting round, as recorded by [`train_boost_with_report`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundReport {
    pub weighted_error: f64,
    pub component_weight: f64,
    /// Degenerate learner: weights were reset to uniform.
    pub reset: bool,
    /// Sample weights after the round.
    pub sample_weights: Vec<f64>,
}

/// Component weight `ln((1-err)/err) + ln(C-1)`, clamped at zero.
pub fn component_weight(weighted_error: f64, classes: usize) -> f64 {
    let err = weighted_error.clamp(1e-12, 1.0);
    let w = ((1.0 - err) / err).ln() + ((classes - 1) as f64).ln();
    w.max(0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoostEnsemble {
    pub architecture: Architecture,
    /// Per-feature centering applied before every component.
    pub input_mean: Vec<f64>,
    /// Per-feature divisor applied after centering.
    pub input_scale: Vec<f64>,
    pub components: Vec<ComponentNet>,
    pub component_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct EnsembleDoc {
    architecture: Architecture,
    input_mean: Vec<f64>,
    input_scale: Vec<f64>,
    component_weights: Vec<f64>,
    components: Vec<Vec<f64>>,
}

impl BoostEnsemble {
    pub fn new(
        architecture: Architecture,
        input_mean: Vec<f64>,
        input_scale: Vec<f64>,
        components: Vec<ComponentNet>,
        component_weights: Vec<f64>,
    ) -> Result<Self> {
        architecture.validate()?;
        let d = architecture.inputs;
        if input_mean.len() != d || input_scale.len() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: input_mean.len().min(input_scale.len()) });
        }
        if input_scale.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidInput("input scales must be positive".into()));
        }
        if components.is_empty() || components.len() != component_weights.len() {
            return Err(Error::InvalidInput("need one weight per component and at least one component".into()));
        }
        if components.iter().any(|c| c.arch != architecture) {
            return Err(Error::InvalidInput("component architecture differs from ensemble".into()));
        }
        if component_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || component_weights.iter().all(|w| *w == 0.0)
        {
            return Err(Error::InvalidInput("component weights must be finite, nonnegative, not all zero".into()));
        }
        Ok(Self { architecture, input_mean, input_scale, components, component_weights })
    }

    /// Ensemble over raw components with identity input scaling.
    pub fn from_components(components: Vec<ComponentNet>, component_weights: Vec<f64>) -> Result<Self> {
        let arch = components
            .first()
            .map(|c| c.arch.clone())
            .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
        let d = arch.inputs;
        Self::new(arch, vec![0.0; d], vec![1.0; d], components, component_weights)
    }

    pub fn classes(&self) -> usize {
        self.architecture.outputs
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.input_mean).zip(&self.input_scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    /// Component-weight-normalized average of component outputs.
    pub fn predict(&self, x: &[f64]) -> Result<ConfidenceVector> {
        if x.len() != self.architecture.inputs {
            return Err(Error::DimensionMismatch { expected: self.architecture.inputs, actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        let z = self.standardize(x);
        let total: f64 = self.component_weights.iter().sum();
        let mut p = vec![0.0; self.classes()];
        for (net, w) in self.components.iter().zip(&self.component_weights) {
            if *w == 0.0 {
                continue;
            }
            for (acc, q) in p.iter_mut().zip(net.probabilities(&z)) {
                *acc += w / total * q;
            }
        }
        Ok(ConfidenceVector::from_raw(p))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = EnsembleDoc {
            architecture: self.architecture.clone(),
            input_mean: self.input_mean.clone(),
            input_scale: self.input_scale.clone(),
            component_weights: self.component_weights.clone(),
            components: self.components.iter().map(|c| c.params.clone()).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: EnsembleDoc = serde_json::from_str(s)?;
        let components = doc
            .components
            .into_iter()
            .map(|p| ComponentNet::from_params(doc.architecture.clone(), p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.architecture, doc.input_mean, doc.input_scale, components, doc.component_weights)
    }
}

pub fn train_boost(t: &FeatureTable, classes: usize, cfg: &TrainConfig) -> Result<BoostEnsemble> {
    train_boost_with_report(t, classes, cfg).map(|(e, _)| e)
}

/// Trains `cfg.components` networks sequentially with SAMME reweighting.
///
/// After each component the weighted training error `err` gives the component
/// weight `ln((1-err)/err) + ln(C-1)`; misclassified rows are multiplied by
/// `exp(weight)` and the weights renormalized. A component with
/// `err >= 1 - 1/C` gets weight zero and the sample weights return to uniform.
pub fn train_boost_with_report(
    t: &FeatureTable,
    classes: usize,
    cfg: &TrainConfig,
) -> Result<(BoostEnsemble, Vec<RoundReport>)> {
    cfg.validate()?;
    let labels = t.labels().ok_or_else(|| Error::MissingLabels("training table has no label column".into()))?;
    if classes < 2 {
        return Err(Error::InvalidConfig("need at least 2 classes".into()));
    }
    if let Some(bad) = labels.iter().find(|l| **l >= classes) {
        return Err(Error::UnknownLabel(bad.to_string()));
    }
    let mut present = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::InvalidInput("training labels cover fewer than 2 classes".into()));
    }

    let n = t.n_samples();
    let d = t.n_features();
    let input_mean = t.column_means();
    let input_scale: Vec<f64> = (0..d)
        .map(|j| {
            let var = t.rows().map(|r| (r[j] - input_mean[j]).powi(2)).sum::<f64>() / n as f64;
            if var > 1e-24 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let x: Vec<f64> = t
        .rows()
        .flat_map(|r| r.iter().zip(&input_mean).zip(&input_scale).map(|((v, m), s)| (v - m) / s))
        .collect();

    let arch = Architecture::standard(d, classes);
    let uniform = 1.0 / n as f64;
    let mut weights = vec![uniform; n];
    let mut components = Vec::with_capacity(cfg.components);
    let mut alphas = Vec::with_capacity(cfg.components);
    let mut report = Vec::with_capacity(cfg.components);
    for m in 0..cfg.components {
        let multipliers: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
        let comp_seed = seed::derive_indexed(cfg.seed, "boost-component", m as u64);
        let net = train_component(arch.clone(), &x, labels, &multipliers, cfg, comp_seed)?;
        let missed: Vec<bool> =
            (0..n).map(|i| argmax(&net.probabilities(&x[i * d..(i + 1) * d])) != labels[i]).collect();
        let err = weights.iter().zip(&missed).filter(|(_, m)| **m).fold(0.0, |acc, (w, _)| acc + w);
        let degenerate = err >= 1.0 - 1.0 / classes as f64;
        let alpha = if degenerate { 0.0 } else { component_weight(err, classes) };
        if degenerate {
            weights.iter_mut().for_each(|w| *w = uniform);
        } else if missed.iter().any(|m| *m) {
            let factor = alpha.exp();
            for (w, miss) in weights.iter_mut().zip(&missed) {
                if *miss {
                    *w *= factor;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        log::debug!("boost round {m}: err={err:.4} alpha={alpha:.4}");
        report.push(RoundReport {
            weighted_error: err,
            component_weight: alpha,
            reset: degenerate,
            sample_weights: weights.clone(),
        });
        components.push(net);
        alphas.push(alpha);
    }
    if alphas.iter().all(|a| *a == 0.0) {
        log::warn!("every boosting round was degenerate; averaging components uniformly");
        alphas.iter_mut().for_each(|a| *a = 1.0);
    }
    Ok((BoostEnsemble::new(arch, input_mean, input_scale, components, alphas)?, report))
}

/// Runs the ensemble over every row and groups the outputs by scan.
///
/// Scans appear in order of first occurrence; a scan's label is taken from
/// its rows when the table is labeled.
pub fn predict_map(e: &BoostEnsemble, t: &FeatureTable, label_space: &LabelSpace) -> Result<Dataset> {
    if label_space.len() != e.classes() {
        return Err(Error::DimensionMismatch { expected: e.classes(), actual: label_space.len() });
    }
    if t.n_features() != e.architecture.inputs {
        return Err(Error::DimensionMismatch { expected: e.architecture.inputs, actual: t.n_features() });
    }
    let mut scans: Vec<ScanRecord> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, id) in t.ids().iter().enumerate() {
        if id.scan_id.is_empty() {
            return Err(Error::InvalidInput(format!("row {i} has an empty scan_id")));
        }
        let label = t.labels().map(|l| l[i]);
        let slot = *index.entry(id.scan_id.as_str()).or_insert_with(|| {
            scans.push(ScanRecord::new(id.scan_id.clone(), Vec::new(), label));
            scans.len() - 1
        });
        if scans[slot].true_label != label {
            return Err(Error::InvalidInput(format!("scan `{}` has rows with different labels", id.scan_id)));
        }
        if scans[slot].slices.iter().any(|s| s.slice_id == id.slice_id) {
            return Err(Error::InvalidInput(format!("duplicate slice `{}` in scan `{}`", id.slice_id, id.scan_id)));
        }
        scans[slot].slices.push(SliceRecord::new(id.slice_id.clone(), e.predict(t.row(i))?));
    }
    Ok(Dataset::new(label_space.clone(), scans))
}
