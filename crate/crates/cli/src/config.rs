//! Run configuration: a JSON document overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lwcnn_core::{CropParams, NetworkConfig, SearchSpace, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Directory holding `Training/` and `Testing/` (or the class folders directly).
    pub dataset_root: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub search: SearchSpace,
    pub crop: CropParams,
    /// Run the crop pipeline while loading instead of only resizing.
    pub crop_on_load: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: None,
            output_dir: PathBuf::from("out"),
            seed: 42,
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            search: SearchSpace::default(),
            crop: CropParams::default(),
            crop_on_load: false,
        }
    }
}

/// Flag values that take precedence over the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub max_trials: Option<usize>,
    pub batch_size: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Applies flags, propagates shared values and validates every section.
    pub fn resolve(mut self, o: &Overrides) -> Result<Self> {
        if let Some(d) = &o.data {
            self.dataset_root = Some(d.clone());
        }
        if let Some(out) = &o.out {
            self.output_dir = out.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(e) = o.epochs {
            self.train.epochs = e;
        }
        if let Some(t) = o.max_trials {
            self.search.max_trials = t;
        }
        if let Some(b) = o.batch_size {
            self.train.batch_size = b;
        }
        self.train.seed = self.seed;
        self.search.input_size = self.network.input_size;
        self.crop.size = self.network.input_size;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate().context("network section")?;
        self.train.validate().context("train section")?;
        self.search.validate().context("search section")?;
        self.crop.validate().context("crop section")?;
        Ok(())
    }

    pub fn dataset_root(&self) -> Result<&Path> {
        self.dataset_root.as_deref().context("no dataset given (use --data or dataset_root in the config)")
    }

    pub fn crop_params(&self) -> Option<&CropParams> {
        self.crop_on_load.then_some(&self.crop)
    }

    /// Writes the effective configuration next to the run's artifacts.
    pub fn write_effective(&self, dir: &Path) -> Result<()> {
        let path = dir.join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
