//! Compact probabilistic classifier.
//!
//! Either a linear softmax model or a single tanh hidden layer followed by a
//! softmax head. Input weights are stored row-per-feature so that sparse inputs
//! touch contiguous memory. Dropout acts on the penultimate representation:
//! hidden activations for the hidden-layer model, input features for the
//! linear one.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::features::FeatureVector;
use crate::seed::{self, streams};

/// Probability vector over the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LabelDistribution(Vec<f64>);

impl LabelDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(CoreError::InvalidDistribution("empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(CoreError::InvalidDistribution("entries must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(CoreError::InvalidDistribution(alloc::format!("sums to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn one_hot(class: usize, class_count: usize) -> Self {
        let mut p = vec![0.0; class_count];
        p[class] = 1.0;
        Self(p)
    }

    pub fn uniform(class_count: usize) -> Self {
        Self(vec![1.0 / class_count as f64; class_count])
    }

    /// Normalize non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(CoreError::InvalidDistribution("weights must have a positive finite sum".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    pub fn max(&self) -> f64 {
        self.0[self.argmax()]
    }
}

impl TryFrom<Vec<f64>> for LabelDistribution {
    type Error = CoreError;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<LabelDistribution> for Vec<f64> {
    fn from(d: LabelDistribution) -> Self {
        d.0
    }
}

/// Index of the first maximal entry.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| libm::exp(z - m)).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Assigned-class logit minus the largest other logit.
pub fn margin(logits: &[f64], assigned: usize) -> Result<f64> {
    if logits.len() < 2 {
        return Err(CoreError::TooFewClasses);
    }
    if assigned >= logits.len() {
        return Err(CoreError::ClassOutOfRange { index: assigned, class_count: logits.len() });
    }
    let other = logits
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != assigned)
        .map(|(_, &z)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(logits[assigned] - other)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub input_dim: usize,
    /// 0 selects the linear model.
    pub hidden_dim: usize,
    pub class_count: usize,
    pub dropout_rate: f64,
    /// `input_dim x first_width`, row per input feature.
    pub input_weights: Vec<f64>,
    pub input_bias: Vec<f64>,
    /// `hidden_dim x class_count`; empty for the linear model.
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl ClassifierParams {
    /// All-zero parameters.
    pub fn zeros(input_dim: usize, hidden_dim: usize, class_count: usize) -> Self {
        let width = if hidden_dim == 0 { class_count } else { hidden_dim };
        Self {
            input_dim,
            hidden_dim,
            class_count,
            dropout_rate: 0.0,
            input_weights: vec![0.0; input_dim * width],
            input_bias: vec![0.0; width],
            output_weights: vec![0.0; hidden_dim * class_count],
            output_bias: if hidden_dim == 0 { Vec::new() } else { vec![0.0; class_count] },
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(CoreError::InvalidConfig(alloc::format!("dropout rate {rate} outside [0, 1)")));
        }
        self.dropout_rate = rate;
        Ok(self)
    }

    pub fn is_linear(&self) -> bool {
        self.hidden_dim == 0
    }

    /// Width of the first layer's output (hidden units, or classes for the linear model).
    pub fn first_width(&self) -> usize {
        if self.is_linear() {
            self.class_count
        } else {
            self.hidden_dim
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.input_weights.len() + self.input_bias.len() + self.output_weights.len() + self.output_bias.len()
    }

    pub fn validate(&self) -> Result<()> {
        let width = self.first_width();
        let shapes_ok = self.input_weights.len() == self.input_dim * width
            && self.input_bias.len() == width
            && self.output_weights.len() == self.hidden_dim * self.class_count
            && self.output_bias.len() == if self.is_linear() { 0 } else { self.class_count };
        if !shapes_ok || self.class_count < 2 || self.input_dim == 0 {
            return Err(CoreError::InvalidConfig("parameter shapes are inconsistent".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(CoreError::InvalidConfig("dropout rate outside [0, 1)".into()));
        }
        if !self.values().all(f64::is_finite) {
            return Err(CoreError::NonFinite("parameters".into()));
        }
        Ok(())
    }

    /// Every parameter in a fixed order: input weights, input bias, output weights, output bias.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.input_weights
            .iter()
            .chain(&self.input_bias)
            .chain(&self.output_weights)
            .chain(&self.output_bias)
            .copied()
    }

    /// Mutable access to the `k`-th parameter in [`ClassifierParams::values`] order.
    pub fn value_mut(&mut self, mut k: usize) -> &mut f64 {
        for block in [&mut self.input_weights, &mut self.input_bias, &mut self.output_weights, &mut self.output_bias] {
            if k < block.len() {
                return &mut block[k];
            }
            k -= block.len();
        }
        panic!("parameter index out of range")
    }

    fn check_input(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.input_dim {
            return Err(CoreError::DimensionMismatch { expected: self.input_dim, actual: x.dim() });
        }
        if !x.is_finite() {
            return Err(CoreError::NonFinite("input features".into()));
        }
        Ok(())
    }
}

/// Seeded initialization: weights uniform in `±1/sqrt(fan_in)`, biases zero.
pub fn init_params(input_dim: usize, hidden_dim: usize, class_count: usize, seed: u64) -> Result<ClassifierParams> {
    if input_dim == 0 || class_count < 2 {
        return Err(CoreError::InvalidConfig("input_dim >= 1 and class_count >= 2 required".into()));
    }
    let mut params = ClassifierParams::zeros(input_dim, hidden_dim, class_count);
    let mut rng = seed::rng(seed::derive(seed, streams::INIT));
    let bound = 1.0 / libm::sqrt(input_dim as f64);
    for w in &mut params.input_weights {
        *w = rng.random_range(-bound..bound);
    }
    if hidden_dim > 0 {
        let bound = 1.0 / libm::sqrt(hidden_dim as f64);
        for w in &mut params.output_weights {
            *w = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

/// Dropout keep-masks for one forward pass; `None` means no dropout.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DropoutMask {
    keep: Vec<bool>,
    scale: f64,
}

impl DropoutMask {
    fn sample(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Self {
        let keep = (0..len).map(|_| rng.random::<f64>() >= rate).collect();
        Self { keep, scale: 1.0 / (1.0 - rate) }
    }

    fn factor(&self, i: usize) -> f64 {
        if self.keep[i] {
            self.scale
        } else {
            0.0
        }
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn forward_trace(params: &ClassifierParams, x: &FeatureVector, mask: Option<&DropoutMask>) -> Trace {
    let width = params.first_width();
    let mut first = params.input_bias.clone();
    for (k, &(i, v)) in x.entries().iter().enumerate() {
        let v = match (mask, params.is_linear()) {
            (Some(m), true) => v * m.factor(k),
            _ => v,
        };
        if v == 0.0 {
            continue;
        }
        let row = &params.input_weights[i as usize * width..(i as usize + 1) * width];
        for (f, w) in first.iter_mut().zip(row) {
            *f += v * w;
        }
    }
    if params.is_linear() {
        return Trace { hidden: Vec::new(), logits: first };
    }
    let mut hidden: Vec<f64> = first.iter().map(|&z| libm::tanh(z)).collect();
    if let Some(m) = mask {
        for (j, h) in hidden.iter_mut().enumerate() {
            *h *= m.factor(j);
        }
    }
    let c = params.class_count;
    let mut logits = params.output_bias.clone();
    for (j, &h) in hidden.iter().enumerate() {
        if h == 0.0 {
            continue;
        }
        let row = &params.output_weights[j * c..(j + 1) * c];
        for (z, w) in logits.iter_mut().zip(row) {
            *z += h * w;
        }
    }
    Trace { hidden, logits }
}

/// Deterministic forward pass (dropout inactive).
pub fn forward(params: &ClassifierParams, x: &FeatureVector) -> Result<(Vec<f64>, LabelDistribution)> {
    params.check_input(x)?;
    let logits = forward_trace(params, x, None).logits;
    let probs = softmax(&logits);
    Ok((logits, LabelDistribution(probs)))
}

/// Predicted class (lowest index on ties) and its probability.
pub fn predict(params: &ClassifierParams, x: &FeatureVector) -> Result<(usize, f64)> {
    let (_, probs) = forward(params, x)?;
    let c = probs.argmax();
    Ok((c, probs.probs()[c]))
}

fn mask_len(params: &ClassifierParams, x: &FeatureVector) -> usize {
    if params.is_linear() {
        x.nnz()
    } else {
        params.hidden_dim
    }
}

fn mc_dropout(
    params: &ClassifierParams,
    x: &FeatureVector,
    samples: usize,
    seed: u64,
    shared_mask: bool,
) -> Result<(LabelDistribution, Vec<f64>)> {
    params.check_input(x)?;
    if params.dropout_rate <= 0.0 {
        return Err(CoreError::Unsupported("MC dropout needs a positive dropout rate".into()));
    }
    if samples < 2 {
        return Err(CoreError::InvalidConfig("MC dropout needs at least two samples".into()));
    }
    let mut rng = seed::rng(seed::derive(seed, streams::DROPOUT));
    let len = mask_len(params, x);
    let shared = DropoutMask::sample(len, params.dropout_rate, &mut rng);
    let c = params.class_count;
    if shared_mask {
        // Identical passes: the mean is any single pass and the variance is exactly zero.
        let probs = softmax(&forward_trace(params, x, Some(&shared)).logits);
        return Ok((LabelDistribution(probs), vec![0.0; c]));
    }
    let draws: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let mask = DropoutMask::sample(len, params.dropout_rate, &mut rng);
            softmax(&forward_trace(params, x, Some(&mask)).logits)
        })
        .collect();
    let n = samples as f64;
    let mut mean = vec![0.0; c];
    for d in &draws {
        for (m, p) in mean.iter_mut().zip(d) {
            *m += p / n;
        }
    }
    let mut var = vec![0.0; c];
    for d in &draws {
        for k in 0..c {
            let e = d[k] - mean[k];
            var[k] += e * e / (n - 1.0);
        }
    }
    let total: f64 = mean.iter().sum();
    mean.iter_mut().for_each(|m| *m /= total);
    Ok((LabelDistribution(mean), var))
}

/// Mean class probabilities and per-class sample variance over `samples`
/// stochastic forward passes with dropout active.
pub fn mc_dropout_predict(
    params: &ClassifierParams,
    x: &FeatureVector,
    samples: usize,
    seed: u64,
) -> Result<(LabelDistribution, Vec<f64>)> {
    mc_dropout(params, x, samples, seed, false)
}

/// Like [`mc_dropout_predict`], but every pass reuses one mask; variance is zero.
pub fn mc_dropout_predict_shared_mask(
    params: &ClassifierParams,
    x: &FeatureVector,
    samples: usize,
    seed: u64,
) -> Result<(LabelDistribution, Vec<f64>)> {
    mc_dropout(params, x, samples, seed, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub optimizer: Optimizer,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, batch_size: 32, epochs: 10, weight_decay: 0.0, seed: 0, optimizer: Optimizer::Adam }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(CoreError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(CoreError::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(CoreError::InvalidConfig("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// One weighted soft-label training example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub features: FeatureVector,
    pub target: LabelDistribution,
    pub weight: f64,
}

impl TrainExample {
    pub fn hard(features: FeatureVector, class: usize, class_count: usize) -> Self {
        Self { features, target: LabelDistribution::one_hot(class, class_count), weight: 1.0 }
    }
}

/// Gradient of the weighted mean cross-entropy. Input-weight rows are sparse:
/// only rows of features present in the batch are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rows: Vec<u32>,
    /// `rows.len() x first_width`
    pub input_weights: Vec<f64>,
    pub input_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
}

impl Gradient {
    /// Dense view in [`ClassifierParams::values`] order.
    pub fn to_dense(&self, params: &ClassifierParams) -> Vec<f64> {
        let width = params.first_width();
        let mut dense = vec![0.0; params.parameter_count()];
        for (r, &row) in self.rows.iter().enumerate() {
            let at = row as usize * width;
            dense[at..at + width].copy_from_slice(&self.input_weights[r * width..(r + 1) * width]);
        }
        let mut at = params.input_weights.len();
        for block in [&self.input_bias, &self.output_weights, &self.output_bias] {
            dense[at..at + block.len()].copy_from_slice(block);
            at += block.len();
        }
        dense
    }
}

fn cross_entropy(target: &[f64], probs: &[f64]) -> f64 {
    target
        .iter()
        .zip(probs)
        .filter(|(&y, _)| y > 0.0)
        .map(|(&y, &p)| -y * libm::log(p.max(f64::MIN_POSITIVE)))
        .sum()
}

/// Weighted mean cross-entropy `Σ wᵢ CEᵢ / Σ wᵢ` of a batch (dropout inactive).
pub fn batch_loss(params: &ClassifierParams, batch: &[TrainExample]) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for ex in batch {
        let (_, probs) = forward(params, &ex.features)?;
        num += ex.weight * cross_entropy(ex.target.probs(), probs.probs());
        den += ex.weight;
    }
    if den <= 0.0 {
        return Err(CoreError::InvalidConfig("batch has zero total weight".into()));
    }
    Ok(num / den)
}

/// Analytic gradient of [`batch_loss`] (dropout inactive).
pub fn loss_gradient(params: &ClassifierParams, batch: &[TrainExample]) -> Result<(f64, Gradient)> {
    for ex in batch {
        params.check_input(&ex.features)?;
    }
    let refs: Vec<&TrainExample> = batch.iter().collect();
    let masks = vec![None; batch.len()];
    backprop(params, &refs, &masks)
}

fn backprop(
    params: &ClassifierParams,
    batch: &[&TrainExample],
    masks: &[Option<DropoutMask>],
) -> Result<(f64, Gradient)> {
    let width = params.first_width();
    let c = params.class_count;
    let mut rows: Vec<u32> = batch.iter().flat_map(|ex| ex.features.entries().iter().map(|&(i, _)| i)).collect();
    rows.sort_unstable();
    rows.dedup();
    let mut grad = Gradient {
        input_weights: vec![0.0; rows.len() * width],
        input_bias: vec![0.0; width],
        output_weights: vec![0.0; params.output_weights.len()],
        output_bias: vec![0.0; params.output_bias.len()],
        rows,
    };
    let total_weight: f64 = batch.iter().map(|ex| ex.weight).sum();
    if total_weight <= 0.0 {
        return Ok((0.0, grad));
    }
    let mut loss = 0.0;
    let mut dfirst = vec![0.0; width];
    for (ex, mask) in batch.iter().zip(masks) {
        let trace = forward_trace(params, &ex.features, mask.as_ref());
        let probs = softmax(&trace.logits);
        loss += ex.weight * cross_entropy(ex.target.probs(), &probs);
        let scale = ex.weight / total_weight;
        let dlogits: Vec<f64> = probs.iter().zip(ex.target.probs()).map(|(p, y)| scale * (p - y)).collect();
        if params.is_linear() {
            dfirst.copy_from_slice(&dlogits);
        } else {
            for k in 0..c {
                grad.output_bias[k] += dlogits[k];
            }
            for (j, &h) in trace.hidden.iter().enumerate() {
                let wrow = &params.output_weights[j * c..(j + 1) * c];
                let grow = &mut grad.output_weights[j * c..(j + 1) * c];
                let mut da = 0.0;
                for k in 0..c {
                    grow[k] += h * dlogits[k];
                    da += wrow[k] * dlogits[k];
                }
                // h = tanh(z) * keep; dh/dz = (1 - tanh²) * keep
                let (t, keep) = match mask {
                    Some(m) if m.factor(j) == 0.0 => (0.0, 0.0),
                    Some(m) => (h / m.factor(j), m.factor(j)),
                    None => (h, 1.0),
                };
                dfirst[j] = da * (1.0 - t * t) * keep;
            }
        }
        for (g, d) in grad.input_bias.iter_mut().zip(&dfirst) {
            *g += d;
        }
        for (k, &(i, v)) in ex.features.entries().iter().enumerate() {
            let v = match (mask, params.is_linear()) {
                (Some(m), true) => v * m.factor(k),
                _ => v,
            };
            if v == 0.0 {
                continue;
            }
            let r = grad.rows.binary_search(&i).expect("row collected above");
            let grow = &mut grad.input_weights[r * width..(r + 1) * width];
            for (g, d) in grow.iter_mut().zip(&dfirst) {
                *g += v * d;
            }
        }
    }
    Ok((loss / total_weight, grad))
}

/// First and second moment estimates for Adam.
struct AdamState {
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Applies one optimizer step. Input-weight rows absent from the batch are left
/// untouched (lazy update), for both weight decay and Adam moments.
fn apply_step(params: &mut ClassifierParams, grad: &Gradient, config: &TrainConfig, adam: Option<&mut AdamState>) {
    let width = params.first_width();
    let lr = config.learning_rate;
    let wd = config.weight_decay;
    let n_in = params.input_weights.len();
    let n_ib = params.input_bias.len();
    let n_ow = params.output_weights.len();
    let update = |offset: usize, value: &mut f64, g: f64, decay: bool, adam: &mut Option<&mut AdamState>| {
        let g = if decay && wd > 0.0 { g + wd * *value } else { g };
        match adam {
            None => *value -= lr * g,
            Some(state) => {
                let m = &mut state.m[offset];
                let v = &mut state.v[offset];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                let mhat = *m / (1.0 - libm::pow(ADAM_BETA1, f64::from(state.step)));
                let vhat = *v / (1.0 - libm::pow(ADAM_BETA2, f64::from(state.step)));
                *value -= lr * mhat / (libm::sqrt(vhat) + ADAM_EPS);
            }
        }
    };
    let mut adam = adam;
    if let Some(state) = adam.as_deref_mut() {
        state.step += 1;
    }
    for (r, &row) in grad.rows.iter().enumerate() {
        for j in 0..width {
            let at = row as usize * width + j;
            update(at, &mut params.input_weights[at], grad.input_weights[r * width + j], true, &mut adam);
        }
    }
    for j in 0..n_ib {
        update(n_in + j, &mut params.input_bias[j], grad.input_bias[j], false, &mut adam);
    }
    for j in 0..n_ow {
        update(n_in + n_ib + j, &mut params.output_weights[j], grad.output_weights[j], true, &mut adam);
    }
    for j in 0..params.output_bias.len() {
        update(n_in + n_ib + n_ow + j, &mut params.output_bias[j], grad.output_bias[j], false, &mut adam);
    }
}

fn check_examples(params: &ClassifierParams, examples: &[TrainExample]) -> Result<()> {
    params.validate()?;
    if examples.is_empty() {
        return Err(CoreError::EmptyInput("training examples"));
    }
    for ex in examples {
        params.check_input(&ex.features)?;
        if ex.target.len() != params.class_count {
            return Err(CoreError::DimensionMismatch { expected: params.class_count, actual: ex.target.len() });
        }
        if !(ex.weight >= 0.0) || !ex.weight.is_finite() {
            return Err(CoreError::InvalidConfig("example weights must be finite and non-negative".into()));
        }
    }
    Ok(())
}

/// Minibatch trainer. `on_epoch` sees the parameters after every epoch.
pub fn train_with<F>(
    params: &ClassifierParams,
    examples: &[TrainExample],
    config: &TrainConfig,
    mut on_epoch: F,
) -> Result<(ClassifierParams, Vec<f64>)>
where
    F: FnMut(usize, &ClassifierParams) -> Result<()>,
{
    config.validate()?;
    check_examples(params, examples)?;
    let mut params = params.clone();
    let mut history = Vec::with_capacity(config.epochs);
    if config.epochs == 0 {
        return Ok((params, history));
    }
    let mut shuffle_rng = seed::rng(seed::derive(config.seed, streams::SHUFFLE));
    let mut dropout_rng = seed::rng(seed::derive(config.seed, streams::DROPOUT));
    let mut adam = match config.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam => {
            let n = params.parameter_count();
            Some(AdamState { step: 0, m: vec![0.0; n], v: vec![0.0; n] })
        }
    };
    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut weight_sum) = (0.0, 0.0);
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&TrainExample> = chunk.iter().map(|&i| &examples[i]).collect();
            let batch_weight: f64 = batch.iter().map(|ex| ex.weight).sum();
            if batch_weight <= 0.0 {
                continue;
            }
            let masks: Vec<Option<DropoutMask>> = batch
                .iter()
                .map(|ex| {
                    (params.dropout_rate > 0.0).then(|| {
                        DropoutMask::sample(mask_len(&params, &ex.features), params.dropout_rate, &mut dropout_rng)
                    })
                })
                .collect();
            let (loss, grad) = backprop(&params, &batch, &masks)?;
            if !loss.is_finite() {
                return Err(CoreError::NonFiniteLoss { epoch, batch: b });
            }
            loss_sum += loss * batch_weight;
            weight_sum += batch_weight;
            apply_step(&mut params, &grad, config, adam.as_mut());
        }
        history.push(if weight_sum > 0.0 { loss_sum / weight_sum } else { 0.0 });
        on_epoch(epoch, &params)?;
    }
    if !params.values().all(f64::is_finite) {
        return Err(CoreError::NonFinite(String::from("parameters after training")));
    }
    Ok((params, history))
}

/// Train for `config.epochs` seeded-shuffled minibatch passes; returns the
/// final parameters and the per-epoch mean training loss.
pub fn train(
    params: &ClassifierParams,
    examples: &[TrainExample],
    config: &TrainConfig,
) -> Result<(ClassifierParams, Vec<f64>)> {
    train_with(params, examples, config, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x(values: &[f64]) -> FeatureVector {
        FeatureVector::from_dense(values).unwrap()
    }

    #[test]
    fn init_is_seeded_with_zero_bias() {
        let a = init_params(50, 8, 3, 9).unwrap();
        assert_eq!(a, init_params(50, 8, 3, 9).unwrap());
        assert_ne!(a, init_params(50, 8, 3, 10).unwrap());
        assert!(a.input_bias.iter().chain(&a.output_bias).all(|&b| b == 0.0));
        let bound = 1.0 / libm::sqrt(50.0);
        assert!(a.input_weights.iter().all(|w| w.abs() < bound));
    }

    #[test]
    fn init_weights_are_centered() {
        let p = init_params(20_000, 0, 2, 3).unwrap();
        let n = p.input_weights.len() as f64;
        let mean = p.input_weights.iter().sum::<f64>() / n;
        let var = p.input_weights.iter().map(|w| (w - mean) * (w - mean)).sum::<f64>() / (n - 1.0);
        let se = libm::sqrt(var / n);
        assert!(mean.abs() < 3.0 * se, "mean {mean} vs se {se}");
    }

    #[test]
    fn zero_weights_give_uniform_probs() {
        let p = ClassifierParams::zeros(4, 0, 5);
        let (_, probs) = forward(&p, &x(&[1.0, 0.0, -2.0, 0.5])).unwrap();
        assert!(probs.probs().iter().all(|&q| (q - 0.2).abs() < 1e-15));
    }

    #[test]
    fn forward_rejects_bad_input() {
        let p = ClassifierParams::zeros(4, 0, 3);
        assert!(forward(&p, &x(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let z = [1.5, -0.3, 2.0, 0.0];
        let shifted: Vec<f64> = z.iter().map(|v| v + 123.0).collect();
        for (a, b) in softmax(&z).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
        let huge = softmax(&[1000.0, 1000.0]);
        assert_eq!(huge, vec![0.5, 0.5]);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(margin(&[2.0, 0.0, -1.0], 0).unwrap(), 2.0);
        assert_eq!(margin(&[0.7, 0.7, 0.7], 2).unwrap(), 0.0);
        assert_eq!(margin(&[1.0], 0), Err(CoreError::TooFewClasses));
        assert!(margin(&[1.0, 2.0], 2).is_err());
    }

    proptest! {
        #[test]
        fn probs_are_normalized(seed in any::<u64>(), hidden in 0usize..6) {
            let p = init_params(6, hidden, 4, seed).unwrap();
            let (_, probs) = forward(&p, &x(&[0.3, -1.0, 2.0, 0.0, 0.5, 1.0])).unwrap();
            prop_assert!((probs.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn top_margin_positive_iff_unique_max(logits in proptest::collection::vec(-3i32..3, 2..6)) {
            let logits: Vec<f64> = logits.into_iter().map(f64::from).collect();
            let top = argmax(&logits);
            let unique = logits.iter().filter(|&&v| v == logits[top]).count() == 1;
            prop_assert_eq!(margin(&logits, top).unwrap() > 0.0, unique);
        }
    }

    fn fixed_batch(classes: usize) -> Vec<TrainExample> {
        let rows = [
            [0.5, -0.2, 0.0, 1.0, 0.3],
            [0.0, 0.9, -0.4, 0.1, 0.0],
            [-0.7, 0.0, 0.8, 0.0, 0.6],
            [0.2, 0.2, 0.2, -0.9, 0.0],
        ];
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                let mut target = vec![0.1 / (classes - 1) as f64; classes];
                target[i % classes] = 0.9;
                TrainExample {
                    features: x(r),
                    target: LabelDistribution::new(target).unwrap(),
                    weight: 0.5 + i as f64 * 0.25,
                }
            })
            .collect()
    }

    fn finite_difference_error(params: &ClassifierParams, batch: &[TrainExample]) -> f64 {
        let (_, grad) = loss_gradient(params, batch).unwrap();
        let analytic = grad.to_dense(params);
        let eps = 1e-4;
        let mut worst: f64 = 0.0;
        for k in 0..params.parameter_count() {
            let mut plus = params.clone();
            *plus.value_mut(k) += eps;
            let mut minus = params.clone();
            *minus.value_mut(k) -= eps;
            let numeric = (batch_loss(&plus, batch).unwrap() - batch_loss(&minus, batch).unwrap()) / (2.0 * eps);
            let err = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let batch = fixed_batch(3);
        for hidden in [0, 4] {
            let mut p = init_params(5, hidden, 3, 17).unwrap();
            // Non-zero biases exercise every term.
            for (k, b) in p.input_bias.iter_mut().chain(p.output_bias.iter_mut()).enumerate() {
                *b = 0.1 * k as f64 - 0.15;
            }
            let err = finite_difference_error(&p, &batch);
            assert!(err < 1e-4, "hidden={hidden}: max relative error {err}");
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let p = init_params(5, 3, 3, 1).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (out, hist) = train(&p, &fixed_batch(3), &cfg).unwrap();
        assert_eq!(out, p);
        assert!(hist.is_empty());
    }

    #[test]
    fn separable_data_converges() {
        let data: Vec<TrainExample> = (0..40)
            .map(|i| {
                let c = i % 2;
                let s = 1.0 + (i as f64) * 0.01;
                let f = if c == 0 { x(&[s, 0.0, 0.1]) } else { x(&[0.0, s, 0.1]) };
                TrainExample::hard(f, c, 2)
            })
            .collect();
        let p = init_params(3, 0, 2, 5).unwrap();
        let cfg = TrainConfig { learning_rate: 0.05, epochs: 200, batch_size: 8, ..TrainConfig::default() };
        let (_, hist) = train(&p, &data, &cfg).unwrap();
        assert!(*hist.last().unwrap() < 0.01, "final loss {}", hist.last().unwrap());
    }

    #[test]
    fn full_batch_descent_is_monotone() {
        let batch = fixed_batch(3);
        let p = init_params(5, 4, 3, 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            batch_size: batch.len(),
            epochs: 1,
            optimizer: Optimizer::Sgd,
            ..TrainConfig::default()
        };
        let mut current = p;
        let mut last = batch_loss(&current, &batch).unwrap();
        for _ in 0..50 {
            current = train(&current, &batch, &cfg).unwrap().0;
            let now = batch_loss(&current, &batch).unwrap();
            assert!(now <= last + 1e-15);
            last = now;
        }
    }

    #[test]
    fn hard_labels_equal_one_hot_soft_labels() {
        let hard: Vec<TrainExample> =
            fixed_batch(3).into_iter().enumerate().map(|(i, e)| TrainExample::hard(e.features, i % 3, 3)).collect();
        let soft: Vec<TrainExample> = hard
            .iter()
            .map(|e| TrainExample {
                features: e.features.clone(),
                target: LabelDistribution::new(e.target.probs().to_vec()).unwrap(),
                weight: 1.0,
            })
            .collect();
        let p = init_params(5, 3, 3, 4).unwrap();
        let cfg = TrainConfig { epochs: 5, batch_size: 2, ..TrainConfig::default() };
        assert_eq!(train(&p, &hard, &cfg).unwrap().0, train(&p, &soft, &cfg).unwrap().0);
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut p = ClassifierParams::zeros(2, 0, 2);
        p.input_weights = vec![1e308, -1e308, 0.0, 0.0];
        let data = vec![TrainExample::hard(x(&[10.0, 0.0]), 1, 2)];
        let cfg = TrainConfig { optimizer: Optimizer::Sgd, learning_rate: 1e300, epochs: 3, ..TrainConfig::default() };
        assert!(train(&p, &data, &cfg).is_err());
    }

    #[test]
    fn mc_dropout_contracts() {
        let p = init_params(6, 8, 3, 7).unwrap();
        let input = x(&[0.3, -1.0, 2.0, 0.0, 0.5, 1.0]);
        assert!(mc_dropout_predict(&p, &input, 5, 1).is_err());
        let p = p.with_dropout(0.3).unwrap();
        assert!(mc_dropout_predict(&p, &input, 1, 1).is_err());
        let (mean, var) = mc_dropout_predict(&p, &input, 20, 1).unwrap();
        assert!((mean.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(var.iter().any(|&v| v > 0.0));
        let (_, var) = mc_dropout_predict_shared_mask(&p, &input, 20, 1).unwrap();
        assert!(var.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mc_variance_shrinks_with_dropout_rate() {
        let base = init_params(6, 32, 3, 11).unwrap();
        let input = x(&[0.3, -1.0, 2.0, 0.0, 0.5, 1.0]);
        let total_var = |rate: f64| -> f64 {
            let p = base.clone().with_dropout(rate).unwrap();
            (0..20u64).map(|s| mc_dropout_predict(&p, &input, 30, s).unwrap().1.iter().sum::<f64>()).sum::<f64>() / 20.0
        };
        let sweep: Vec<f64> = [0.5, 0.3, 0.1, 0.02].iter().map(|&r| total_var(r)).collect();
        assert!(sweep.windows(2).all(|w| w[1] < w[0]), "{sweep:?}");
    }
}
