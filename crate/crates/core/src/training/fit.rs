use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{forward_prepared, loss, objective, ModelConfig, ModelParams, PreparedSample};
use crate::training::{adam_step, select_threshold, AdamState, ThresholdChoice};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr0: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Learning-rate multiplier applied after `plateau_patience` epochs
    /// without validation improvement.
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub early_stop_patience: usize,
    /// L2 coefficient on every parameter.
    pub lambda: f64,
    pub seed: u64,
    /// Weight of the positive class in the cross-entropy; `None` uses
    /// `#negatives / #positives` on the training samples.
    pub pos_weight: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-3,
            batch_size: 64,
            max_epochs: 50,
            plateau_factor: 0.5,
            plateau_patience: 3,
            early_stop_patience: 8,
            lambda: 1e-4,
            seed: 42,
            pos_weight: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 > 0.0) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return Err(Error::Config(format!(
                "plateau_factor must lie in (0, 1), got {}",
                self.plateau_factor
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if let Some(w) = self.pos_weight {
            if !(w > 0.0) {
                return Err(Error::Config("pos_weight must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean objective over the epoch's mini-batches.
    pub train_loss: f64,
    /// Objective on the validation samples after the epoch.
    pub val_loss: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub threshold: ThresholdChoice,
    /// 0 when no epoch ran.
    pub best_epoch: usize,
    pub pos_weight: f64,
}

/// Scores every sample in order.
pub fn score_samples(samples: &[PreparedSample], params: &ModelParams, cfg: &ModelConfig) -> Result<Vec<f64>> {
    samples.iter().map(|s| forward_prepared(s, params, cfg)).collect()
}

/// Objective value (no gradient) over a whole set.
pub fn evaluate_loss(
    samples: &[PreparedSample],
    params: &ModelParams,
    cfg: &ModelConfig,
    lambda: f64,
    pos_weight: f64,
) -> Result<f64> {
    let scores = score_samples(samples, params, cfg)?;
    let labels: Vec<bool> = samples.iter().map(|s| s.label).collect();
    let out = loss(&scores, &labels, 0.0, &[], pos_weight)?;
    Ok(out.value + lambda * params.sum_squares())
}

pub fn fit(
    train: &[PreparedSample],
    val: &[PreparedSample],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<FitOutcome> {
    model_cfg.validate()?;
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Size(format!(
            "training needs non-empty train and validation sets (got {} / {})",
            train.len(),
            val.len()
        )));
    }
    let positives = train.iter().filter(|s| s.label).count();
    if positives == 0 {
        return Err(Error::Training(
            "no positive samples in the training set; class weight is undefined".into(),
        ));
    }
    let pos_weight = cfg
        .pos_weight
        .unwrap_or((train.len() - positives) as f64 / positives as f64)
        .max(f64::MIN_POSITIVE);

    let mut params = ModelParams::init(model_cfg, cfg.seed);
    let mut theta = params.to_flat();
    let mut adam = AdamState::new(theta.len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut lr = cfg.lr0;
    let mut stale = 0usize;
    let mut since_lr_change = 0usize;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PreparedSample> = chunk.iter().map(|&i| &train[i]).collect();
            let (value, grads) = objective(&batch, &params, model_cfg, cfg.lambda, pos_weight)?;
            adam_step(&mut theta, &grads.to_flat(), &mut adam, lr)?;
            params.set_flat(&theta)?;
            total += value * chunk.len() as f64;
        }
        let train_loss = total / train.len() as f64;
        let val_loss = evaluate_loss(val, &params, model_cfg, cfg.lambda, pos_weight)?;
        if !val_loss.is_finite() {
            return Err(Error::Training(format!("validation loss diverged at epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr,
        });
        log::debug!("epoch {epoch}: train {train_loss:.5} val {val_loss:.5} lr {lr:.2e}");

        if val_loss < best_val {
            best_val = val_loss;
            best_params = params.clone();
            best_epoch = epoch;
            stale = 0;
            since_lr_change = 0;
        } else {
            stale += 1;
            since_lr_change += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
            if since_lr_change >= cfg.plateau_patience {
                lr *= cfg.plateau_factor;
                since_lr_change = 0;
            }
        }
    }

    let val_scores = score_samples(val, &best_params, model_cfg)?;
    let val_labels: Vec<bool> = val.iter().map(|s| s.label).collect();
    let threshold = select_threshold(&val_scores, &val_labels)?;
    Ok(FitOutcome {
        params: best_params,
        history,
        threshold,
        best_epoch,
        pos_weight,
    })
}

/// Writes `epoch,train_loss,val_loss,lr`.
pub fn write_history_csv(history: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, r.val_loss, r.lr));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(path, e))
}
