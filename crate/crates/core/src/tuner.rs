//! Random hyperparameter search scored by stratified k-fold cross-validation.
//!
//! A trial's objective is the mean over folds of the best validation
//! accuracy seen during that fold's training. Folds are fixed once per
//! search and every fold training starts from its own fresh network.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_kfold, stratified_split, DatasetIndex, FoldAssignment, LoadedSet, Split};
use crate::error::{Error, Result};
use crate::nn::network::{ALLOWED_KERNELS, CONV_BLOCKS, DEFAULT_INPUT_SIZE};
use crate::nn::{save_weights, Network, NetworkConfig};
use crate::seed;
use crate::trainer::{fit, FitOutcome, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub filter_choices: Vec<usize>,
    pub kernel_choices: Vec<usize>,
    pub dense_choices: Vec<usize>,
    pub dropout_choices: Vec<f64>,
    /// Learning rate is `10^u` with `u` uniform in `[lr_log10_min, lr_log10_max]`.
    pub lr_log10_min: f64,
    pub lr_log10_max: f64,
    pub max_trials: usize,
    pub folds: usize,
    pub input_size: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            filter_choices: vec![32, 64, 128],
            kernel_choices: vec![3, 4],
            dense_choices: vec![256, 320, 384, 448, 512],
            dropout_choices: vec![0.3, 0.4, 0.5, 0.6],
            lr_log10_min: -4.0,
            lr_log10_max: -2.0,
            max_trials: 4,
            folds: 5,
            input_size: DEFAULT_INPUT_SIZE,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.filter_choices.is_empty()
            || self.kernel_choices.is_empty()
            || self.dense_choices.is_empty()
            || self.dropout_choices.is_empty()
        {
            return Err(Error::Config("every search-space candidate set must be non-empty".into()));
        }
        if !(self.lr_log10_min.is_finite() && self.lr_log10_max.is_finite() && self.lr_log10_min <= self.lr_log10_max) {
            return Err(Error::Config(format!(
                "learning-rate exponent bounds [{}, {}] are not ordered",
                self.lr_log10_min, self.lr_log10_max
            )));
        }
        if self.max_trials == 0 {
            return Err(Error::Config("max_trials must be at least 1".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config(format!("folds = {} must be at least 2", self.folds)));
        }
        // input size must survive every pooling stage
        let probe = NetworkConfig {
            filters: [self.filter_choices[0]; CONV_BLOCKS],
            kernels: [self.kernel_choices[0]; CONV_BLOCKS],
            dense_units: self.dense_choices[0],
            dropout_rate: self.dropout_choices[0],
            learning_rate: 10f64.powf(self.lr_log10_min),
            input_size: self.input_size,
        };
        probe.validate()?;
        for &k in &self.kernel_choices {
            if !ALLOWED_KERNELS.contains(&k) {
                return Err(Error::Config(format!("kernel choice {k} not in {ALLOWED_KERNELS:?}")));
            }
        }
        for &f in self.filter_choices.iter().chain(&self.dense_choices) {
            if f == 0 {
                return Err(Error::Config("filter and dense choices must be positive".into()));
            }
        }
        for &d in &self.dropout_choices {
            NetworkConfig { dropout_rate: d, ..probe.clone() }.validate()?;
        }
        Ok(())
    }

    /// Whether `cfg` can be produced by [`sample_trial`].
    pub fn contains(&self, cfg: &NetworkConfig) -> bool {
        let log_lr = cfg.learning_rate.log10();
        cfg.filters.iter().all(|f| self.filter_choices.contains(f))
            && cfg.kernels.iter().all(|k| self.kernel_choices.contains(k))
            && self.dense_choices.contains(&cfg.dense_units)
            && self.dropout_choices.contains(&cfg.dropout_rate)
            && log_lr >= self.lr_log10_min - 1e-12
            && log_lr <= self.lr_log10_max + 1e-12
            && cfg.input_size == self.input_size
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub id: usize,
    pub seed: u64,
    pub network: NetworkConfig,
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, choices: &[T]) -> T {
    choices[rng.random_range(0..choices.len())]
}

/// Independent uniform draw of every field.
pub fn sample_trial<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R, id: usize, trial_seed: u64) -> TrialConfig {
    let mut filters = [0; CONV_BLOCKS];
    let mut kernels = [0; CONV_BLOCKS];
    for i in 0..CONV_BLOCKS {
        filters[i] = pick(rng, &space.filter_choices);
        kernels[i] = pick(rng, &space.kernel_choices);
    }
    let dense_units = pick(rng, &space.dense_choices);
    let dropout_rate = pick(rng, &space.dropout_choices);
    let u = if space.lr_log10_max > space.lr_log10_min {
        rng.random_range(space.lr_log10_min..=space.lr_log10_max)
    } else {
        space.lr_log10_min
    };
    TrialConfig {
        id,
        seed: trial_seed,
        network: NetworkConfig {
            filters,
            kernels,
            dense_units,
            dropout_rate,
            learning_rate: 10f64.powf(u),
            input_size: space.input_size,
        },
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub id: usize,
    pub config: NetworkConfig,
    /// Best validation accuracy of each fold, indexed by fold id.
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

/// Initialization seed of the network trained for `fold` in a trial.
pub fn fold_seed(trial_seed: u64, fold: usize) -> u64 {
    seed::mix(&[trial_seed, seed::tag::FOLD, fold as u64])
}

/// Trains one fresh network per fold, in `order`, and scores each by its best
/// validation accuracy. `on_fold` sees every finished fold training with
/// the split it used.
pub fn run_trial(
    trial: &TrialConfig,
    folds: &FoldAssignment,
    data: &LoadedSet,
    train_cfg: &TrainConfig,
    order: &[usize],
    mut on_fold: impl FnMut(usize, &Split, &FitOutcome),
) -> Result<TrialResult> {
    if folds.fold_of.len() != data.len() {
        return Err(Error::Shape(format!(
            "fold assignment covers {} samples, data has {}",
            folds.fold_of.len(),
            data.len()
        )));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..folds.k).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument(format!("fold order {order:?} is not a permutation of 0..{}", folds.k)));
    }
    let mut scores = vec![0.0; folds.k];
    for &f in order {
        let wrap = |e: Error| Error::Trial { trial: trial.id, fold: f, source: Box::new(e) };
        let split = folds.split(f);
        let network = Network::build(&trial.network, fold_seed(trial.seed, f)).map_err(wrap)?;
        let cfg = TrainConfig { seed: fold_seed(trial.seed, f), ..train_cfg.clone() };
        let outcome = fit(network, &data.subset(&split.train), &data.subset(&split.val), &cfg).map_err(wrap)?;
        scores[f] = outcome.history.best_val_acc().unwrap_or(0.0);
        log::info!("trial {} fold {}: best val acc {:.4}", trial.id, f, scores[f]);
        on_fold(f, &split, &outcome);
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok(TrialResult { id: trial.id, config: trial.network.clone(), fold_scores: scores, mean })
}

/// Index of the best trial: highest mean, ties to the lowest id.
pub fn select_best(trials: &[TrialResult]) -> Option<usize> {
    let mut best: Option<&TrialResult> = None;
    for t in trials {
        match best {
            Some(b) if t.mean < b.mean || (t.mean == b.mean && t.id > b.id) => {}
            _ => best = Some(t),
        }
    }
    best.map(|b| b.id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TunerReport {
    pub trials: Vec<TrialResult>,
    pub best_id: usize,
    pub tie_break: String,
    pub fold_trainings: usize,
    pub folds: usize,
    /// Sample paths (relative to the dataset root) in each fold.
    pub fold_paths: Vec<Vec<String>>,
    pub seed: u64,
}

impl TunerReport {
    pub fn best(&self) -> &TrialResult {
        self.trials.iter().find(|t| t.id == self.best_id).expect("best id refers to a trial")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Runs `space.max_trials` trials over folds computed once from `index`.
/// `data` holds the decoded images of `index`, in the same order.
pub fn search(
    space: &SearchSpace,
    index: &DatasetIndex,
    data: &LoadedSet,
    train_cfg: &TrainConfig,
    search_seed: u64,
) -> Result<TunerReport> {
    search_with(space, index, data, train_cfg, search_seed, |_, _, _, _| {})
}

/// [`search`] with a hook called after every fold training.
pub fn search_with(
    space: &SearchSpace,
    index: &DatasetIndex,
    data: &LoadedSet,
    train_cfg: &TrainConfig,
    search_seed: u64,
    mut on_fold: impl FnMut(usize, usize, &Split, &FitOutcome),
) -> Result<TunerReport> {
    space.validate()?;
    train_cfg.validate()?;
    if index.len() != data.len() || index.samples().iter().zip(&data.samples).any(|(a, b)| a != b) {
        return Err(Error::InvalidArgument("loaded data does not match the dataset index".into()));
    }
    if data.size != space.input_size {
        return Err(Error::Shape(format!("images are {} px, search space expects {}", data.size, space.input_size)));
    }
    let folds = stratified_kfold(index, space.folds, seed::mix(&[search_seed, seed::tag::FOLD]))?;
    let mut rng = seed::stream(&[search_seed, seed::tag::SEARCH]);
    let order: Vec<usize> = (0..folds.k).collect();
    let mut trials = Vec::with_capacity(space.max_trials);
    let mut fold_trainings = 0;
    for id in 0..space.max_trials {
        let trial = sample_trial(space, &mut rng, id, seed::mix(&[search_seed, seed::tag::TRIAL, id as u64]));
        log::info!("trial {id}: {:?}", trial.network);
        let result = run_trial(&trial, &folds, data, train_cfg, &order, |f, split, outcome| {
            fold_trainings += 1;
            on_fold(id, f, split, outcome);
        })?;
        log::info!("trial {id}: mean best val acc {:.4}", result.mean);
        trials.push(result);
    }
    let best_id = select_best(&trials).expect("at least one trial");
    let fold_paths =
        (0..folds.k).map(|f| folds.members(f).into_iter().map(|i| index.relative_path(i)).collect()).collect();
    Ok(TunerReport {
        trials,
        best_id,
        tie_break: "lowest trial id".into(),
        fold_trainings,
        folds: folds.k,
        fold_paths,
        seed: search_seed,
    })
}

/// Final model from the best configuration: fresh network, internal
/// stratified 80/20 split for the callbacks, weights written to `weights`.
pub fn retrain_best(
    report: &TunerReport,
    index: &DatasetIndex,
    data: &LoadedSet,
    train_cfg: &TrainConfig,
    weights: &Path,
) -> Result<FitOutcome> {
    if report.trials.is_empty() {
        return Err(Error::InvalidArgument("tuner report has no trials".into()));
    }
    let cfg = &report.best().config;
    let final_seed = seed::mix(&[report.seed, seed::tag::FINAL]);
    let split = stratified_split(index, 0.8, final_seed)?;
    let network = Network::build(cfg, final_seed)?;
    let train = TrainConfig { seed: final_seed, ..train_cfg.clone() };
    let outcome = fit(network, &data.subset(&split.train), &data.subset(&split.val), &train)?;
    save_weights(&outcome.network, weights)?;
    Ok(outcome)
}
