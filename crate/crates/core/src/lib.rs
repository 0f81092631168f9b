//! Lightweight CNN pipeline for four-class brain MRI classification.
//!
//! Everything is implemented from first principles on top of a small
//! tensor type: contour cropping, augmentation, the four-block CNN with
//! Adamax training and its callbacks, cross-validated random search, and
//! the evaluation metrics.

pub mod augment;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod preprocess;
pub mod seed;
pub mod synthetic;
pub mod tensor;
pub mod trainer;
pub mod tuner;

pub use augment::AugmentConfig;
pub use dataset::{ClassLabel, DatasetIndex, LoadedSet, Sample};
pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, Report};
pub use nn::{AdamaxState, Network, NetworkConfig};
pub use preprocess::{CropParams, Rgb8};
pub use tensor::{Scalar, Tensor};
pub use trainer::{CallbackConfig, History, TrainConfig};
pub use tuner::{SearchSpace, TunerReport};
