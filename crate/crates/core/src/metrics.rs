//! Macro-F1, confusion matrices and expected calibration error.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Scores {
    pub macro_f1: f64,
    /// F1 per active class, in the order the active classes were given.
    pub per_class: Vec<(usize, f64)>,
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Unweighted mean of per-class F1 over `active_classes`.
///
/// A class with zero precision and recall (including one that is never
/// predicted and never gold) contributes 0.
pub fn macro_f1(predictions: &[usize], golds: &[usize], active_classes: &[usize]) -> Result<F1Scores> {
    if predictions.len() != golds.len() {
        return Err(CoreError::DimensionMismatch { expected: golds.len(), actual: predictions.len() });
    }
    if predictions.is_empty() {
        return Err(CoreError::EmptyInput("predictions"));
    }
    if active_classes.is_empty() {
        return Err(CoreError::EmptyInput("active classes"));
    }
    let width = active_classes.iter().chain(predictions).chain(golds).copied().max().unwrap_or(0) + 1;
    let (mut tp, mut fp, mut fn_) = (vec![0usize; width], vec![0usize; width], vec![0usize; width]);
    for (&p, &g) in predictions.iter().zip(golds) {
        if p == g {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[g] += 1;
        }
    }
    let per_class: Vec<(usize, f64)> = active_classes.iter().map(|&c| (c, f1_from_counts(tp[c], fp[c], fn_[c]))).collect();
    let macro_f1 = per_class.iter().map(|&(_, f)| f).sum::<f64>() / per_class.len() as f64;
    Ok(F1Scores { macro_f1, per_class })
}

/// `counts[gold][predicted]`.
pub fn confusion(predictions: &[usize], golds: &[usize], class_count: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != golds.len() {
        return Err(CoreError::DimensionMismatch { expected: golds.len(), actual: predictions.len() });
    }
    let mut counts = vec![vec![0usize; class_count]; class_count];
    for (&p, &g) in predictions.iter().zip(golds) {
        for index in [p, g] {
            if index >= class_count {
                return Err(CoreError::ClassOutOfRange { index, class_count });
            }
        }
        counts[g][p] += 1;
    }
    Ok(counts)
}

/// Macro-F1 recomputed from a confusion matrix.
pub fn macro_f1_from_confusion(counts: &[Vec<usize>], active_classes: &[usize]) -> f64 {
    let per: Vec<f64> = active_classes
        .iter()
        .map(|&c| {
            let tp = counts[c][c];
            let predicted: usize = counts.iter().map(|row| row[c]).sum();
            let gold: usize = counts[c].iter().sum();
            f1_from_counts(tp, predicted - tp, gold - tp)
        })
        .collect();
    per.iter().sum::<f64>() / per.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// 0 for empty bins.
    pub mean_confidence: f64,
    /// 0 for empty bins.
    pub accuracy: f64,
}

fn bin_index(confidence: f64, bin_count: usize) -> usize {
    // Bins are [b/B, (b+1)/B) with the last one closed on the right. The
    // product estimate is corrected against the exact edge values.
    let edge = |b: usize| b as f64 / bin_count as f64;
    let mut idx = ((confidence * bin_count as f64) as usize).min(bin_count - 1);
    while idx > 0 && confidence < edge(idx) {
        idx -= 1;
    }
    while idx + 1 < bin_count && confidence >= edge(idx + 1) {
        idx += 1;
    }
    idx
}

/// Expected calibration error over equal-width confidence bins.
pub fn ece(confidences: &[f64], correct: &[bool], bin_count: usize) -> Result<(f64, Vec<ReliabilityBin>)> {
    if confidences.len() != correct.len() {
        return Err(CoreError::DimensionMismatch { expected: correct.len(), actual: confidences.len() });
    }
    if confidences.is_empty() {
        return Err(CoreError::EmptyInput("confidences"));
    }
    if bin_count == 0 {
        return Err(CoreError::InvalidConfig("bin_count must be at least 1".into()));
    }
    if confidences.iter().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(CoreError::InvalidConfig("confidences must lie in [0, 1]".into()));
    }
    let mut count = vec![0usize; bin_count];
    let mut conf_sum = vec![0.0; bin_count];
    let mut hits = vec![0usize; bin_count];
    for (&c, &ok) in confidences.iter().zip(correct) {
        let b = bin_index(c, bin_count);
        count[b] += 1;
        conf_sum[b] += c;
        hits[b] += usize::from(ok);
    }
    let n = confidences.len() as f64;
    let mut total = 0.0;
    let bins = (0..bin_count)
        .map(|b| {
            let (mean_confidence, accuracy) = if count[b] == 0 {
                (0.0, 0.0)
            } else {
                (conf_sum[b] / count[b] as f64, hits[b] as f64 / count[b] as f64)
            };
            if count[b] > 0 {
                total += count[b] as f64 / n * (mean_confidence - accuracy).abs();
            }
            ReliabilityBin {
                lower: b as f64 / bin_count as f64,
                upper: (b + 1) as f64 / bin_count as f64,
                count: count[b],
                mean_confidence,
                accuracy,
            }
        })
        .collect();
    Ok((total, bins))
}

/// Everything reported for one evaluation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    /// Indexed by class; inactive classes hold 0.
    pub per_class_f1: Vec<f64>,
    pub active_classes: Vec<usize>,
    pub ece: f64,
    pub bins: Vec<ReliabilityBin>,
    pub confusion: Vec<Vec<usize>>,
    pub sample_count: usize,
}

impl MetricsReport {
    /// Confidence is the probability of the predicted class.
    pub fn from_predictions(
        predictions: &[usize],
        confidences: &[f64],
        golds: &[usize],
        class_count: usize,
        active_classes: &[usize],
        bin_count: usize,
    ) -> Result<Self> {
        let f1 = macro_f1(predictions, golds, active_classes)?;
        let correct: Vec<bool> = predictions.iter().zip(golds).map(|(p, g)| p == g).collect();
        let (ece, bins) = ece(confidences, &correct, bin_count)?;
        let confusion = confusion(predictions, golds, class_count)?;
        let mut per_class_f1 = vec![0.0; class_count];
        for &(c, f) in &f1.per_class {
            per_class_f1[c] = f;
        }
        Ok(Self {
            macro_f1: f1.macro_f1,
            per_class_f1,
            active_classes: active_classes.to_vec(),
            ece,
            bins,
            confusion,
            sample_count: predictions.len(),
        })
    }
}
