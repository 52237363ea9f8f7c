//! Training loop with per-epoch model selection on dev EER.

mod data;
mod evaluate;
mod matrix;

pub use data::{SegmentDataset, SegmentSample};
pub use evaluate::evaluate_dataset;
pub use matrix::{format_avg_best, run_matrix, MatrixCell, MatrixReport};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::compute_eer;
use crate::models::{CheckpointMeta, FusionModel, ModelConfig};
use crate::nn::{softmax_xent, Adam, AdamConfig, HasParams, Mode};

/// Training hyperparameters. 30 epochs with Adam (beta2 = 0.98, weight
/// decay 1e-5) and best-dev-EER epoch selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Seed for shuffling (model init comes from the model config's seed).
    pub seed: u64,
    /// Force single-threaded layer math.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed: 0,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("training needs at least one epoch".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config(
                "batch size must be at least 2 (batch-norm needs batch statistics)".into(),
            ));
        }
        self.adam.validate()
    }
}

/// Per-epoch record of the training trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_eer: f64,
}

pub struct FitResult {
    pub model: FusionModel<f32>,
    pub meta: CheckpointMeta,
    pub adam: Adam<f32>,
    pub history: Vec<EpochStats>,
}

/// Trains on the segment dataset, computing dev EER (utterance level) after
/// every epoch and retaining the parameters of the best epoch.
/// Deterministic for fixed seeds; single- and multi-threaded runs produce
/// bit-identical trajectories.
pub fn fit(
    model_config: &ModelConfig,
    train_set: &SegmentDataset,
    dev_set: &SegmentDataset,
    cfg: &TrainConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Empty("training or dev set is empty".into()));
    }
    crate::nn::set_single_threaded(cfg.deterministic);

    let mut model: FusionModel<f32> = FusionModel::build(model_config)?;
    let with_phase = model.uses_phase();
    let mut adam = Adam::new(cfg.adam.clone())?;
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(cfg.seed);

    let mut best: Option<(f64, usize, Vec<Vec<f32>>, Vec<Vec<f32>>)> = None;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut indices: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        let mut n_batches = 0usize;
        for chunk in indices.chunks(cfg.batch_size) {
            if chunk.len() < 2 {
                continue; // batch-norm needs at least 2 rows
            }
            let (mag, phase, labels) = train_set.make_batch(chunk, with_phase)?;
            model.zero_grad();
            let logits = model.forward(&mag, phase.as_ref(), Mode::Train)?;
            let (loss, grad) = softmax_xent(&logits, &labels)?;
            model.backward(&grad)?;
            adam.step(&mut model)?;
            loss_sum += loss as f64;
            n_batches += 1;
        }

        let dev_scores = evaluate_dataset(&mut model, dev_set, cfg.batch_size.max(16))?;
        let (dev_eer, _) = compute_eer(&dev_scores)?;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / n_batches.max(1) as f64,
            dev_eer,
        });

        let better = best.as_ref().map_or(true, |(b, ..)| dev_eer < *b);
        if better {
            let mut params = Vec::new();
            model.visit_params(&mut |p| params.push(p.value.clone()));
            let mut buffers = Vec::new();
            model.visit_buffers(&mut |b| buffers.push(b.value.clone()));
            best = Some((dev_eer, epoch, params, buffers));
        }
    }

    let (best_dev_eer, epoch_of_best, params, buffers) = best.expect("at least one epoch ran");
    let mut it = params.into_iter();
    model.visit_params_mut(&mut |p| p.value = it.next().expect("aligned params"));
    let mut it = buffers.into_iter();
    model.visit_buffers_mut(&mut |b| b.value = it.next().expect("aligned buffers"));

    Ok(FitResult {
        model,
        meta: CheckpointMeta {
            best_dev_eer,
            epoch_of_best: epoch_of_best as u32,
            seed: cfg.seed,
        },
        adam,
        history,
    })
}

/// Single-batch descent sanity: one Adam step on a fixed batch must lower
/// the loss on that same batch.
pub fn descent_check(
    model_config: &ModelConfig,
    ds: &SegmentDataset,
    batch_size: usize,
) -> Result<(f64, f64)> {
    let mut model: FusionModel<f32> = FusionModel::build(model_config)?;
    let with_phase = model.uses_phase();
    let indices: Vec<usize> = (0..batch_size.min(ds.len())).collect();
    let (mag, phase, labels) = ds.make_batch(&indices, with_phase)?;
    let mut adam = Adam::new(AdamConfig::default())?;

    model.zero_grad();
    let logits = model.forward(&mag, phase.as_ref(), Mode::Train)?;
    let (loss_before, grad) = softmax_xent(&logits, &labels)?;
    model.backward(&grad)?;
    adam.step(&mut model)?;

    let logits = model.forward(&mag, phase.as_ref(), Mode::Train)?;
    let (loss_after, _) = softmax_xent(&logits, &labels)?;
    Ok((loss_before as f64, loss_after as f64))
}

/// Repeatedly steps on one batch until the train loss drops below the
/// target; returns the step count or an error when the budget is exhausted.
pub fn overfit_one_batch(
    model_config: &ModelConfig,
    ds: &SegmentDataset,
    batch_size: usize,
    target_loss: f64,
    max_steps: usize,
) -> Result<usize> {
    let mut model: FusionModel<f32> = FusionModel::build(model_config)?;
    let with_phase = model.uses_phase();
    let indices: Vec<usize> = (0..batch_size.min(ds.len())).collect();
    let (mag, phase, labels) = ds.make_batch(&indices, with_phase)?;
    let mut adam = Adam::new(AdamConfig::default())?;

    for step in 1..=max_steps {
        model.zero_grad();
        let logits = model.forward(&mag, phase.as_ref(), Mode::Train)?;
        let (loss, grad) = softmax_xent(&logits, &labels)?;
        if (loss as f64) < target_loss {
            return Ok(step);
        }
        model.backward(&grad)?;
        adam.step(&mut model)?;
    }
    Err(Error::Metric(format!(
        "loss did not reach {target_loss} within {max_steps} steps"
    )))
}
