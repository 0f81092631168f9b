//! `lwcnn` command-line pipeline.
//!
//! Each subcommand reads a [`RunConfig`] (JSON file plus flag overrides),
//! echoes the effective configuration into the output directory and writes
//! all of its artifacts there.

pub mod commands;
pub mod config;
pub mod featuremaps;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "lwcnn", version, about = "Lightweight CNN pipeline for brain MRI tumor classification")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for every artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub max_trials: Option<usize>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    /// Dataset root (holding Training/ and Testing/, or class folders directly).
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-class image counts of the Training and Testing trees, as CSV.
    Stats,
    /// Crops every image to the brain region and mirrors the tree under --out.
    Crop,
    /// Trains the configured network on an 80/20 split of the training tree.
    Train,
    /// Random search with k-fold scoring, final retrain and test evaluation.
    Tune,
    /// Scores saved weights on the test tree.
    Evaluate {
        #[arg(long)]
        weights: PathBuf,
    },
    /// Writes conv1/conv2 activation grids for one image.
    Featuremaps {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        image: PathBuf,
    },
    /// Writes augmented variants of one image.
    AugmentPreview {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
    /// Generates a synthetic Training/Testing tree of geometric patterns.
    MakeFixture {
        #[arg(long, default_value_t = 10)]
        train_per_class: usize,
        #[arg(long, default_value_t = 5)]
        test_per_class: usize,
        #[arg(long, default_value_t = 150)]
        size: usize,
    },
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            data: self.data.clone(),
            out: self.out.clone(),
            seed: self.seed,
            epochs: self.epochs,
            max_trials: self.max_trials,
            batch_size: self.batch_size,
        }
    }
}
