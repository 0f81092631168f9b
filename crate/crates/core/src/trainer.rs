//! Epoch loop with Adamax, seeded shuffling and augmentation, plus the
//! early-stopping and learning-rate-plateau callbacks.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::{augment_batch, AugmentConfig};
use crate::dataset::{one_hot, ClassLabel, LoadedSet};
use crate::error::{Error, Result};
use crate::nn::{softmax_ce, AdamaxState, Network, NUM_CLASSES};
use crate::preprocess::Rgb8;
use crate::seed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CallbackConfig {
    pub es_patience: usize,
    pub es_min_delta: f64,
    pub rlrop_patience: usize,
    pub rlrop_factor: f64,
    pub rlrop_min_lr: f64,
}

impl Default for CallbackConfig {
    fn default() -> Self {
        Self { es_patience: 8, es_min_delta: 1e-4, rlrop_patience: 5, rlrop_factor: 0.3, rlrop_min_lr: 1e-6 }
    }
}

impl CallbackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.es_patience == 0 || self.rlrop_patience == 0 {
            return Err(Error::Config("callback patiences must be at least 1".into()));
        }
        if !(self.es_min_delta.is_finite() && self.es_min_delta >= 0.0) {
            return Err(Error::Config(format!("es_min_delta {} must be non-negative", self.es_min_delta)));
        }
        if !(self.rlrop_factor > 0.0 && self.rlrop_factor < 1.0) {
            return Err(Error::Config(format!("rlrop_factor {} must lie in (0, 1)", self.rlrop_factor)));
        }
        if !(self.rlrop_min_lr.is_finite() && self.rlrop_min_lr > 0.0) {
            return Err(Error::Config(format!("rlrop_min_lr {} must be positive", self.rlrop_min_lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub augment: AugmentConfig,
    pub augment_enabled: bool,
    pub callbacks: CallbackConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            seed: 0,
            augment: AugmentConfig::default(),
            augment_enabled: true,
            callbacks: CallbackConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        self.augment.validate()?;
        self.callbacks.validate()
    }
}

fn check_loss(val_loss: f64) -> Result<()> {
    if val_loss.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { value: val_loss, context: "validation loss passed to a callback".into() })
    }
}

/// Stops after `patience` consecutive epochs without an improvement larger
/// than `min_delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopState {
    pub patience: usize,
    pub min_delta: f64,
    pub best_loss: f64,
    pub wait: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EarlyStopStep {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopState {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self { patience, min_delta, best_loss: f64::INFINITY, wait: 0 }
    }

    pub fn update(&mut self, val_loss: f64) -> Result<EarlyStopStep> {
        check_loss(val_loss)?;
        let improved = self.best_loss - val_loss > self.min_delta;
        if improved {
            self.best_loss = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
        }
        Ok(EarlyStopStep { improved, stop: self.wait >= self.patience })
    }
}

/// Multiplies the learning rate by `factor` (floored at `min_lr`) after
/// `patience` stagnant epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauState {
    pub patience: usize,
    pub min_delta: f64,
    pub factor: f64,
    pub min_lr: f64,
    pub best_loss: f64,
    pub wait: usize,
    pub lr: f64,
}

impl PlateauState {
    pub fn new(cfg: &CallbackConfig, lr: f64) -> Self {
        Self {
            patience: cfg.rlrop_patience,
            min_delta: cfg.es_min_delta,
            factor: cfg.rlrop_factor,
            min_lr: cfg.rlrop_min_lr,
            best_loss: f64::INFINITY,
            wait: 0,
            lr,
        }
    }

    /// Returns the learning rate for the next epoch.
    pub fn update(&mut self, val_loss: f64) -> Result<f64> {
        check_loss(val_loss)?;
        if self.best_loss - val_loss > self.min_delta {
            self.best_loss = val_loss;
            self.wait = 0;
        } else {
            self.wait += 1;
            if self.wait >= self.patience {
                self.lr = (self.lr * self.factor).max(self.min_lr);
                self.wait = 0;
            }
        }
        Ok(self.lr)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub records: Vec<EpochRecord>,
}

impl History {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_acc,val_loss,val_acc,lr";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_val_acc(&self) -> Option<f64> {
        self.records.iter().map(|r| r.val_acc).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in &self.records {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.lr);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Outcome of an inference pass over a set.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub accuracy: f64,
    pub predictions: Vec<usize>,
    pub probs: Vec<[f32; NUM_CLASSES]>,
}

fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn batch_items<'a>(set: &'a LoadedSet, positions: &[usize]) -> Vec<(u64, &'a Rgb8)> {
    positions.iter().map(|&i| (i as u64, &set.images[i])).collect()
}

fn batch_labels(set: &LoadedSet, positions: &[usize]) -> Result<Tensor> {
    let labels: Vec<ClassLabel> = positions.iter().map(|&i| set.samples[i].label).collect();
    one_hot(&labels)
}

/// Dropout off, augmentation off; loss is the mean cross-entropy.
pub fn evaluate(network: &Network, set: &LoadedSet, batch_size: usize) -> Result<Evaluation> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate an empty set".into()));
    }
    if batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let all: Vec<usize> = (0..set.len()).collect();
    let cfg = AugmentConfig::default();
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut predictions = Vec::with_capacity(set.len());
    let mut probs = Vec::with_capacity(set.len());
    for chunk in all.chunks(batch_size) {
        let x = augment_batch(&batch_items(set, chunk), &cfg, 0, 0, false, set.size)?;
        let y = batch_labels(set, chunk)?;
        let out = softmax_ce(&network.forward(&x)?, &y)?;
        loss_sum += out.loss as f64 * chunk.len() as f64;
        for (row, &i) in out.probs.data().chunks(NUM_CLASSES).zip(chunk) {
            let p = argmax(row);
            correct += usize::from(p == set.samples[i].label.index());
            predictions.push(p);
            probs.push(row.try_into().expect("row has NUM_CLASSES entries"));
        }
    }
    let n = set.len() as f64;
    Ok(Evaluation { loss: loss_sum / n, accuracy: correct as f64 / n, predictions, probs })
}

/// Network plus optimizer state.
#[derive(Clone, Debug)]
pub struct Trainer {
    pub network: Network,
    pub optimizer: AdamaxState,
    pub config: TrainConfig,
}

/// Loss and correct-count of one optimizer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
}

impl Trainer {
    pub fn new(network: Network, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let optimizer = AdamaxState::for_params(network.config().learning_rate, &network.params());
        Ok(Self { network, optimizer, config })
    }

    /// One forward/backward/update on a prepared batch.
    pub fn train_step(&mut self, x: &Tensor, onehot: &Tensor, dropout_seed: u64) -> Result<StepStats> {
        let mut rng = seed::stream(&[dropout_seed, seed::tag::DROPOUT]);
        let (logits, cache) = self.network.forward_train(x, &mut rng)?;
        let out = softmax_ce(&logits, onehot)?;
        let loss = out.loss as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite { value: loss, context: "training batch".into() });
        }
        let grads = self.network.backward(&cache, &out.grad_logits)?;
        self.optimizer.step(&mut self.network.params_mut(), &grads.as_slices())?;
        let correct = out
            .probs
            .data()
            .chunks(NUM_CLASSES)
            .zip(onehot.data().chunks(NUM_CLASSES))
            .filter(|(p, y)| y[argmax(p)] == 1.0)
            .count();
        Ok(StepStats { loss, correct })
    }

    /// Shuffled pass over `set`; returns mean loss and accuracy.
    pub fn train_epoch(&mut self, set: &LoadedSet, epoch: usize) -> Result<(f64, f64)> {
        if set.is_empty() {
            return Err(Error::InvalidArgument("cannot train on an empty set".into()));
        }
        let cfg = &self.config;
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut seed::stream(&[cfg.seed, seed::tag::SHUFFLE, epoch as u64]));
        let (seed_value, batch_size, augment, enabled) =
            (cfg.seed, cfg.batch_size, cfg.augment.clone(), cfg.augment_enabled);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, chunk) in order.chunks(batch_size).enumerate() {
            let x = augment_batch(&batch_items(set, chunk), &augment, seed_value, epoch as u64, enabled, set.size)?;
            let y = batch_labels(set, chunk)?;
            let dropout_seed = seed::mix(&[seed_value, epoch as u64, b as u64]);
            let stats = self.train_step(&x, &y, dropout_seed).map_err(|e| match e {
                Error::NonFinite { value, .. } => {
                    Error::NonFinite { value, context: format!("epoch {}, batch {}", epoch + 1, b + 1) }
                }
                other => other,
            })?;
            loss_sum += stats.loss * chunk.len() as f64;
            correct += stats.correct;
        }
        let n = set.len() as f64;
        Ok((loss_sum / n, correct as f64 / n))
    }
}

/// Result of [`fit`].
#[derive(Clone, Debug)]
pub struct FitOutcome {
    /// Weights from the best validation epoch.
    pub network: Network,
    pub history: History,
    /// 1-based epoch whose weights were restored.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Trains with both callbacks and restores the best weights at the end.
pub fn fit(network: Network, train: &LoadedSet, val: &LoadedSet, cfg: &TrainConfig) -> Result<FitOutcome> {
    fit_with(network, train, val, cfg, |_| {})
}

/// [`fit`] with a hook called after every completed epoch.
pub fn fit_with(
    network: Network,
    train: &LoadedSet,
    val: &LoadedSet,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<FitOutcome> {
    if train.size != val.size || train.size != network.config().input_size {
        return Err(Error::Shape(format!(
            "image size {} / {} does not match network input {}",
            train.size,
            val.size,
            network.config().input_size
        )));
    }
    let mut trainer = Trainer::new(network, cfg.clone())?;
    let mut early = EarlyStopState::new(cfg.callbacks.es_patience, cfg.callbacks.es_min_delta);
    let mut plateau = PlateauState::new(&cfg.callbacks, trainer.optimizer.learning_rate);
    let mut best = trainer.network.clone();
    let mut best_epoch = 0;
    let mut history = History::default();
    let mut stopped_early = false;

    for epoch in 0..cfg.epochs {
        let lr = trainer.optimizer.learning_rate;
        let (train_loss, train_acc) = trainer.train_epoch(train, epoch)?;
        let ev = evaluate(&trainer.network, val, cfg.batch_size)?;
        if !ev.loss.is_finite() {
            return Err(Error::NonFinite { value: ev.loss, context: format!("validation after epoch {}", epoch + 1) });
        }
        let record =
            EpochRecord { epoch: epoch + 1, train_loss, train_acc, val_loss: ev.loss, val_acc: ev.accuracy, lr };
        log::info!(
            "epoch {}: loss {:.4} acc {:.4} val_loss {:.4} val_acc {:.4} lr {:.3e}",
            record.epoch,
            train_loss,
            train_acc,
            ev.loss,
            ev.accuracy,
            lr
        );
        on_epoch(&record);
        history.records.push(record);

        trainer.optimizer.learning_rate = plateau.update(ev.loss)?;
        let step = early.update(ev.loss)?;
        if step.improved {
            best = trainer.network.clone();
            best_epoch = epoch + 1;
        }
        if step.stop {
            stopped_early = epoch + 1 < cfg.epochs;
            break;
        }
    }
    Ok(FitOutcome { network: best, history, best_epoch, stopped_early })
}
