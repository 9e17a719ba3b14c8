//! Test-set evaluation and threshold sweeps.

use std::fs;
use std::path::Path;

use crate::data::{CropGeometry, Dataset};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::util::parallel_map;

use super::metrics::{decode_indices, metrics, EvalReport, SampleMetrics};
use super::train::prepare_inputs;

/// Decision-head probabilities for every sample. Evaluation is read-only;
/// the model is never mutated.
fn decision_probs(
    model: &Model<f32>,
    dataset: &Dataset,
    geometry: &CropGeometry,
    threads: usize,
) -> Result<Vec<(Vec<f32>, Vec<usize>)>> {
    if dataset.is_empty() {
        return Err(Error::Data("cannot evaluate on an empty dataset".into()));
    }
    let items = prepare_inputs(dataset, geometry, model.architecture(), threads)?;
    let results = parallel_map(threads, items.len(), |i| {
        let (input, _) = &items[i];
        let probs = model.decision_probs(input)?;
        Ok::<_, Error>((probs.data().to_vec(), dataset.samples[i].label.indices()))
    });
    results.into_iter().collect()
}

fn report_at(
    probs: &[(Vec<f32>, Vec<usize>)],
    threshold: f32,
    fold_id: Option<usize>,
) -> Result<EvalReport> {
    let per_sample: Vec<SampleMetrics> = probs
        .iter()
        .map(|(p, real)| {
            let tensor = crate::tensor::Tensor::from_vec(&[p.len()], p.clone())?;
            metrics(&decode_indices(&tensor, threshold), real)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_samples(threshold, fold_id, per_sample))
}

/// Per-sample precision/recall/f1 of the decision head at one threshold,
/// with arithmetic means.
pub fn evaluate(
    model: &Model<f32>,
    dataset: &Dataset,
    geometry: &CropGeometry,
    threshold: f32,
    threads: usize,
) -> Result<EvalReport> {
    let probs = decision_probs(model, dataset, geometry, threads)?;
    report_at(&probs, threshold, None)
}

/// Evaluate once per threshold. Probabilities are computed once and decoded
/// repeatedly, so a single-threshold sweep equals `evaluate` exactly.
pub fn threshold_sweep(
    model: &Model<f32>,
    dataset: &Dataset,
    geometry: &CropGeometry,
    thresholds: &[f32],
    threads: usize,
) -> Result<Vec<EvalReport>> {
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("thresholds must be sorted ascending".into()));
    }
    let probs = decision_probs(model, dataset, geometry, threads)?;
    thresholds.iter().map(|&t| report_at(&probs, t, None)).collect()
}

/// Plot-ready table: one "threshold precision recall f1" row per report.
pub fn write_report_table(reports: &[EvalReport], path: &Path) -> Result<()> {
    let mut out = String::from("threshold\tprecision\trecall\tf1\n");
    for r in reports {
        out.push_str(&format!(
            "{:.4}\t{:.6}\t{:.6}\t{:.6}\n",
            r.threshold, r.precision, r.recall, r.f1
        ));
    }
    fs::write(path, out)?;
    Ok(())
}
