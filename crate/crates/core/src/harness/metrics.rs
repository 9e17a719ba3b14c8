//! Per-sample multi-label metrics and their averages.
//!
//! For one sample with predicted herb set P and real herb set R:
//!   precision = |P n R| / |P|   (0 when P is empty)
//!   recall    = |P n R| / |R|
//!   f1        = harmonic mean of the two (0 when both are 0)
//! Dataset-level numbers are arithmetic means of the per-sample values, so
//! the reported f1 is an average of harmonic means, not the harmonic mean
//! of the reported precision and recall.

use std::collections::HashSet;

use crate::data::HerbDictionary;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Indices whose probability strictly exceeds the threshold.
pub fn decode_indices(probs: &Tensor<f32>, threshold: f32) -> Vec<usize> {
    probs
        .data()
        .iter()
        .enumerate()
        .filter_map(|(i, &p)| (p > threshold).then_some(i))
        .collect()
}

/// Threshold decoding mapped to herb names.
pub fn decode_prescription<'d>(
    probs: &Tensor<f32>,
    threshold: f32,
    dictionary: &'d HerbDictionary,
) -> Result<Vec<&'d str>> {
    if probs.len() != dictionary.len() {
        return Err(Error::Data(format!(
            "{} probabilities do not cover a dictionary of {}",
            probs.len(),
            dictionary.len()
        )));
    }
    Ok(decode_indices(probs, threshold)
        .into_iter()
        .map(|i| dictionary.name(i).unwrap())
        .collect())
}

/// Metrics for one generated prescription against the real one. The real
/// set must be nonempty (real prescriptions always are).
pub fn metrics(predicted: &[usize], real: &[usize]) -> Result<SampleMetrics> {
    if real.is_empty() {
        return Err(Error::Data("real prescription is empty".into()));
    }
    let real_set: HashSet<usize> = real.iter().copied().collect();
    let predicted_set: HashSet<usize> = predicted.iter().copied().collect();
    let true_count = predicted_set.iter().filter(|h| real_set.contains(h)).count() as f64;

    let precision =
        if predicted_set.is_empty() { 0.0 } else { true_count / predicted_set.len() as f64 };
    let recall = true_count / real_set.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SampleMetrics { precision, recall, f1 })
}

/// Per-sample metrics of one test set at one threshold, plus their means.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub threshold: f32,
    pub fold_id: Option<usize>,
    pub per_sample: Vec<SampleMetrics>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    pub fn from_samples(
        threshold: f32,
        fold_id: Option<usize>,
        per_sample: Vec<SampleMetrics>,
    ) -> Self {
        let count = per_sample.len().max(1) as f64;
        let precision = per_sample.iter().map(|m| m.precision).sum::<f64>() / count;
        let recall = per_sample.iter().map(|m| m.recall).sum::<f64>() / count;
        let f1 = per_sample.iter().map(|m| m.f1).sum::<f64>() / count;
        EvalReport { threshold, fold_id, per_sample, precision, recall, f1 }
    }
}
