//! The training loop: shuffled minibatch SGD with a held-out validation
//! split, early stopping on validation loss, and best-epoch restoration.

use std::fs;
use std::path::Path;

use crate::data::{CropGeometry, Dataset};
use crate::error::{Error, Result};
use crate::loss::{bce_logit_grad, bce_loss, summed_loss};
use crate::models::{Architecture, Model, ModelInput};
use crate::optim::SgdState;
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::util::parallel_map;

use super::config::TrainConfig;

/// One epoch's losses. Per-head entries are present for the three-grained
/// network (organ, region, face order) and empty for the conventional one.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub per_head_train: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose validation loss was lowest; its parameters are
    /// the ones returned.
    pub best_epoch: usize,
    /// True when the patience rule fired before max_epochs.
    pub stopped_early: bool,
}

impl History {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs
            .iter()
            .find(|e| e.epoch == self.best_epoch)
            .map(|e| e.val_loss)
            .unwrap_or(f64::INFINITY)
    }

    /// Line-oriented history file: one record per epoch.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("epoch\ttrain_loss\tval_loss\torgan_loss\tregion_loss\tface_loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{}\t{:.6}\t{:.6}", e.epoch, e.train_loss, e.val_loss));
            for h in &e.per_head_train {
                out.push_str(&format!("\t{h:.6}"));
            }
            if e.per_head_train.is_empty() {
                out.push_str("\t-\t-\t-");
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "# best_epoch {} stopped_early {}\n",
            self.best_epoch, self.stopped_early
        ));
        fs::write(path, out)?;
        Ok(())
    }
}

/// Patience-based stopping on validation loss: after `patience` consecutive
/// epochs without a new best, training halts.
#[derive(Debug)]
pub struct EarlyStopper {
    patience: usize,
    best: f64,
    best_epoch: usize,
    bad_epochs: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        EarlyStopper { patience, best: f64::INFINITY, best_epoch: 0, bad_epochs: 0 }
    }

    /// Record one epoch's validation loss. Returns (improved, stop).
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.bad_epochs = 0;
            (true, false)
        } else {
            self.bad_epochs += 1;
            (false, self.bad_epochs >= self.patience)
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Everything a training run needs per sample, segmented once up front.
pub(crate) fn prepare_inputs(
    dataset: &Dataset,
    geometry: &CropGeometry,
    arch: Architecture,
    threads: usize,
) -> Result<Vec<(ModelInput<f32>, Tensor<f32>)>> {
    let results = parallel_map(threads, dataset.len(), |i| {
        let sample = &dataset.samples[i];
        let target = sample.label.to_tensor::<f32>();
        let input = match arch {
            // The conventional network never touches the crops.
            Architecture::Conventional => Ok(ModelInput {
                face: sample.face.clone(),
                organs: Vec::new(),
                regions: Vec::new(),
            }),
            Architecture::ThreeGrained => sample.to_model_input(geometry),
        };
        input.map(|input| (input, target))
    });
    results.into_iter().collect()
}

/// Gradient and loss sums accumulated by one worker over its share of a
/// batch. Loss gradients are pre-scaled by 1/batch so the combined result
/// is the batch-mean gradient.
struct BatchAccum {
    grads: Vec<Tensor<f32>>,
    loss_sum: f64,
    head_loss_sums: Vec<f64>,
}

/// Forward/backward over one batch, split into contiguous index chunks, one
/// worker per chunk. Each sample's dropout stream is derived from its
/// global position, so results do not depend on the chunking.
fn accumulate_batch(
    model: &Model<f32>,
    items: &[(ModelInput<f32>, Tensor<f32>)],
    batch: &[usize],
    threads: usize,
    dropout_rng: &Rng,
    stream_base: usize,
) -> Vec<Result<BatchAccum>> {
    let workers = crate::util::resolve_threads(threads).min(batch.len());
    let chunk_size = batch.len().div_ceil(workers);
    let inv_batch = 1.0 / batch.len() as f64;
    let head_count = model.head_count();

    let run_chunk = |chunk_index: usize| -> Result<BatchAccum> {
        let start = chunk_index * chunk_size;
        let end = (start + chunk_size).min(batch.len());
        let mut accum = BatchAccum {
            grads: Vec::new(),
            loss_sum: 0.0,
            head_loss_sums: vec![0.0; if head_count == 3 { 3 } else { 0 }],
        };
        for k in start..end {
            let (input, target) = &items[batch[k]];
            let mut item_rng = dropout_rng.derive((stream_base + k) as u64);
            let (heads, cache) = model.forward_train(input, &mut item_rng)?;
            let mut logit_grads = Vec::with_capacity(heads.len());
            for (h, head) in heads.iter().enumerate() {
                let loss = bce_loss(head, target)?;
                accum.loss_sum += loss;
                if let Some(slot) = accum.head_loss_sums.get_mut(h) {
                    *slot += loss;
                }
                logit_grads.push(bce_logit_grad(head, target)?.scale(inv_batch as f32));
            }
            let grads = model.backward(&cache, &logit_grads)?;
            if accum.grads.is_empty() {
                accum.grads = grads;
            } else {
                for (a, g) in accum.grads.iter_mut().zip(&grads) {
                    a.add_assign(g)?;
                }
            }
        }
        Ok(accum)
    };

    if workers <= 1 {
        return vec![run_chunk(0)];
    }
    let chunk_count = batch.len().div_ceil(chunk_size);
    let mut results: Vec<Option<Result<BatchAccum>>> = (0..chunk_count).map(|_| None).collect();
    std::thread::scope(|scope| {
        for (chunk_index, slot) in results.iter_mut().enumerate() {
            let run_chunk = &run_chunk;
            scope.spawn(move || {
                *slot = Some(run_chunk(chunk_index));
            });
        }
    });
    results.into_iter().map(|r| r.expect("every chunk ran")).collect()
}

/// Mean eval-mode loss over a set of samples (the early-stopping signal).
fn validation_loss(
    model: &Model<f32>,
    items: &[(ModelInput<f32>, Tensor<f32>)],
    indices: &[usize],
    threads: usize,
) -> Result<f64> {
    let losses = parallel_map(threads, indices.len(), |k| {
        let (input, target) = &items[indices[k]];
        let heads = model.forward_eval(input)?;
        match heads.len() {
            1 => bce_loss(&heads[0], target),
            3 => Ok(summed_loss(&heads[0], &heads[1], &heads[2], target)?.total),
            other => Err(Error::Config(format!("unexpected head count {other}"))),
        }
    });
    let mut total = 0.0;
    for loss in losses {
        total += loss?;
    }
    Ok(total / indices.len().max(1) as f64)
}

/// Train `model` on `dataset` under `config`. The validation split is drawn
/// from this dataset by shuffling with the config seed; minibatch SGD runs
/// on the remainder. Returns the per-epoch history; on return the model
/// carries the parameters of the best-validation epoch.
pub fn train(
    model: &mut Model<f32>,
    dataset: &Dataset,
    geometry: &CropGeometry,
    config: &TrainConfig,
) -> Result<History> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Data("cannot train on an empty dataset".into()));
    }
    if dataset.image_size != model.input_size() {
        return Err(Error::Config(format!(
            "model expects {0}x{0} faces, dataset is {1}x{1}",
            model.input_size(),
            dataset.image_size
        )));
    }
    if dataset.herb_count() != model.herb_count() {
        return Err(Error::Config(format!(
            "model predicts {} herbs, dataset has {}",
            model.herb_count(),
            dataset.herb_count()
        )));
    }

    let items = prepare_inputs(dataset, geometry, model.architecture(), config.threads)?;

    // The validation split is drawn from original samples only; augmented
    // copies of a held-out original are excluded from the SGD stream, so an
    // expanded dataset never leaks validation faces into training.
    let mut rng = Rng::new(config.seed);
    let mut originals: Vec<usize> =
        (0..items.len()).filter(|&i| dataset.samples[i].source.is_none()).collect();
    if originals.is_empty() {
        return Err(Error::Data("dataset has no original samples".into()));
    }
    rng.shuffle(&mut originals);
    let val_count = ((originals.len() as f64 * config.val_fraction).round() as usize)
        .clamp(1, originals.len().saturating_sub(1).max(1));
    let val_indices: Vec<usize> = originals[..val_count].to_vec();
    let val_set: std::collections::HashSet<usize> = val_indices.iter().copied().collect();
    let mut train_indices: Vec<usize> = (0..items.len())
        .filter(|&i| {
            !val_set.contains(&i)
                && dataset.samples[i].source.map_or(true, |src| !val_set.contains(&src))
        })
        .collect();
    if train_indices.is_empty() {
        return Err(Error::Data("validation split leaves no training samples".into()));
    }
    if config.batch_size > train_indices.len() {
        return Err(Error::Config(format!(
            "batch size {} exceeds the {}-sample training split",
            config.batch_size,
            train_indices.len()
        )));
    }

    let mut optimizer = SgdState::new(config.optimizer, &model.params())?;
    let mut stopper = EarlyStopper::new(config.patience);
    let mut history = Vec::new();
    let mut best_params: Vec<Tensor<f32>> = model.params().into_iter().cloned().collect();
    let mut stopped_early = false;
    // Dropout masks draw from per-sample streams derived from a dedicated
    // branch of the seed, so they do not depend on thread count.
    let dropout_rng = rng.derive(0xd209);

    let head_count = model.head_count();
    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut train_indices);
        let mut epoch_loss = 0.0f64;
        let mut epoch_head_loss = vec![0.0f64; if head_count == 3 { 3 } else { 0 }];
        let mut batch_count = 0usize;

        for (batch_no, batch) in train_indices.chunks(config.batch_size).enumerate() {
            let accums = accumulate_batch(
                model,
                &items,
                batch,
                config.threads,
                &dropout_rng,
                epoch * items.len() + batch_no * config.batch_size,
            );

            // Combining per-worker partial sums in worker order makes the
            // reduction a deterministic function of the thread count; with
            // one thread it is the plain sequential order.
            let mut batch_grads: Option<Vec<Tensor<f32>>> = None;
            let mut batch_loss = 0.0f64;
            let mut batch_head_loss = vec![0.0f64; epoch_head_loss.len()];
            let batch_len = batch.len() as f64;
            for accum in accums {
                let accum = accum?;
                batch_loss += accum.loss_sum / batch_len;
                for (acc, loss) in batch_head_loss.iter_mut().zip(&accum.head_loss_sums) {
                    *acc += loss / batch_len;
                }
                match &mut batch_grads {
                    None => batch_grads = Some(accum.grads),
                    Some(acc) => {
                        for (a, g) in acc.iter_mut().zip(&accum.grads) {
                            a.add_assign(g)?;
                        }
                    }
                }
            }
            let batch_grads = batch_grads.expect("batches are nonempty");
            optimizer.step(&mut model.params_mut(), &batch_grads)?;
            epoch_loss += batch_loss;
            for (acc, loss) in epoch_head_loss.iter_mut().zip(&batch_head_loss) {
                *acc += loss;
            }
            batch_count += 1;
        }

        let train_loss = epoch_loss / batch_count as f64;
        let per_head_train: Vec<f64> =
            epoch_head_loss.iter().map(|h| h / batch_count as f64).collect();
        let val_loss = validation_loss(model, &items, &val_indices, config.threads)?;
        history.push(EpochRecord { epoch, train_loss, val_loss, per_head_train });

        let (improved, stop) = stopper.observe(epoch, val_loss);
        if improved {
            for (slot, param) in best_params.iter_mut().zip(model.params()) {
                slot.data_mut().copy_from_slice(param.data());
            }
        }
        if stop {
            stopped_early = true;
            break;
        }
    }

    // Restore the best-validation parameters.
    for (param, saved) in model.params_mut().into_iter().zip(&best_params) {
        param.data_mut().copy_from_slice(saved.data());
    }

    Ok(History { epochs: history, best_epoch: stopper.best_epoch(), stopped_early })
}
