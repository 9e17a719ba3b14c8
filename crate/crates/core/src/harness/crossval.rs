//! The 5-fold evaluation protocol: disjoint fixed-size test sets, one
//! independently trained model per fold, results averaged across folds.

use std::fmt::Write as _;

use crate::data::{AugmentParams, CropGeometry, Dataset};
use crate::error::{Error, Result};
use crate::models::{Architecture, Model};
use crate::rng::Rng;

use super::config::TrainConfig;
use super::evaluate::evaluate;
use super::metrics::EvalReport;
use super::train::{train, History};

/// Disjoint test index sets, one per fold; the train indices of a fold are
/// the complement of its test set.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    dataset_len: usize,
}

pub const FOLD_COUNT: usize = 5;
/// Test-set size used by the reference protocol; smaller datasets fall back
/// to floor(len / folds).
pub const DEFAULT_TEST_SIZE: usize = 500;

impl FoldPlan {
    /// Shuffle sample indices and cut `fold_count` disjoint test sets of
    /// `test_size` (default: min(len/folds, 500)).
    pub fn new(
        dataset_len: usize,
        fold_count: usize,
        test_size: Option<usize>,
        rng: &mut Rng,
    ) -> Result<Self> {
        if fold_count == 0 {
            return Err(Error::Config("fold count must be positive".into()));
        }
        let test_size = test_size.unwrap_or((dataset_len / fold_count).min(DEFAULT_TEST_SIZE));
        if test_size == 0 || fold_count * test_size > dataset_len {
            return Err(Error::Data(format!(
                "dataset of {dataset_len} cannot provide {fold_count} disjoint test sets of {test_size}"
            )));
        }
        let mut order: Vec<usize> = (0..dataset_len).collect();
        rng.shuffle(&mut order);
        let folds = (0..fold_count)
            .map(|f| order[f * test_size..(f + 1) * test_size].to_vec())
            .collect();
        Ok(FoldPlan { folds, dataset_len })
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let test: std::collections::HashSet<usize> = self.folds[fold].iter().copied().collect();
        (0..self.dataset_len).filter(|i| !test.contains(i)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub report: EvalReport,
    pub history: History,
}

/// Mean and standard deviation (over folds) of each metric.
#[derive(Debug, Clone)]
pub struct CrossvalSummary {
    pub architecture: Architecture,
    pub augmented: bool,
    pub outcomes: Vec<FoldOutcome>,
    pub precision_mean: f64,
    pub precision_std: f64,
    pub recall_mean: f64,
    pub recall_std: f64,
    pub f1_mean: f64,
    pub f1_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl CrossvalSummary {
    fn new(architecture: Architecture, augmented: bool, outcomes: Vec<FoldOutcome>) -> Self {
        let precisions: Vec<f64> = outcomes.iter().map(|o| o.report.precision).collect();
        let recalls: Vec<f64> = outcomes.iter().map(|o| o.report.recall).collect();
        let f1s: Vec<f64> = outcomes.iter().map(|o| o.report.f1).collect();
        let (precision_mean, precision_std) = mean_std(&precisions);
        let (recall_mean, recall_std) = mean_std(&recalls);
        let (f1_mean, f1_std) = mean_std(&f1s);
        CrossvalSummary {
            architecture,
            augmented,
            outcomes,
            precision_mean,
            precision_std,
            recall_mean,
            recall_std,
            f1_mean,
            f1_std,
        }
    }

    pub fn model_label(&self) -> String {
        format!(
            "{}{}",
            self.architecture,
            if self.augmented { " (augmented)" } else { "" }
        )
    }

    /// One summary row: model, precision, recall, f1, each as
    /// "mean% +- std%".
    pub fn table_row(&self) -> String {
        format!(
            "{}\t{:.2} ± {:.2}\t{:.2} ± {:.2}\t{:.2} ± {:.2}",
            self.model_label(),
            self.precision_mean * 100.0,
            self.precision_std * 100.0,
            self.recall_mean * 100.0,
            self.recall_std * 100.0,
            self.f1_mean * 100.0,
            self.f1_std * 100.0,
        )
    }
}

/// Render summaries as a tab-separated table with a header.
pub fn summary_table(summaries: &[CrossvalSummary]) -> String {
    let mut out = String::from("model\tprecision(%)\trecall(%)\tf1(%)\n");
    for s in summaries {
        let _ = writeln!(out, "{}", s.table_row());
    }
    out
}

/// Train and evaluate one architecture under the fold plan. Augmentation,
/// when requested, expands each fold's *training* split only, so augmented
/// copies can never share information with their fold's test set.
pub fn cross_validate(
    dataset: &Dataset,
    plan: &FoldPlan,
    arch: Architecture,
    geometry: &CropGeometry,
    config: &TrainConfig,
    augment: Option<(f64, AugmentParams)>,
) -> Result<CrossvalSummary> {
    if plan.dataset_len != dataset.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} samples, dataset has {}",
            plan.dataset_len,
            dataset.len()
        )));
    }
    let master = Rng::new(config.seed);
    let mut outcomes = Vec::with_capacity(plan.folds.len());
    for fold in 0..plan.folds.len() {
        let train_indices = plan.train_indices(fold);
        let mut train_split = Dataset {
            dictionary: dataset.dictionary.clone(),
            image_size: dataset.image_size,
            samples: train_indices.iter().map(|&i| dataset.samples[i].clone()).collect(),
        };
        if let Some((factor, params)) = &augment {
            train_split = train_split.expand(*factor, params, &master.derive(0xa6 + fold as u64))?;
        }
        let test_split = Dataset {
            dictionary: dataset.dictionary.clone(),
            image_size: dataset.image_size,
            samples: plan.folds[fold].iter().map(|&i| dataset.samples[i].clone()).collect(),
        };

        let mut fold_rng = master.derive(0xf01d + fold as u64);
        let mut model = Model::build(arch, dataset.herb_count(), dataset.image_size, &mut fold_rng)?;
        let fold_config = TrainConfig { seed: config.seed ^ (fold as u64 + 1), ..*config };
        let history = train(&mut model, &train_split, geometry, &fold_config)?;
        let mut report =
            evaluate(&model, &test_split, geometry, config.threshold, config.threads)?;
        report.fold_id = Some(fold);
        outcomes.push(FoldOutcome { fold, report, history });
    }
    Ok(CrossvalSummary::new(arch, augment.is_some(), outcomes))
}
