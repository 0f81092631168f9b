//! Contour-based brain cropping.
//!
//! grayscale → 5×5 Gaussian blur → binary threshold → erosion → dilation
//! → largest 8-connected component → crop to its extreme points → resize.

pub mod components;
pub mod filter;
pub mod morphology;
pub mod raster;
pub mod resize;

use serde::{Deserialize, Serialize};

pub use components::{largest_component_bbox, ComponentBox};
pub use filter::{gaussian_blur5, threshold, to_grayscale};
pub use morphology::{dilate, erode};
pub use raster::{BinaryMask, BoundingBox, Grayscale8, Rgb8};
pub use resize::{crop, crop_resize, resize_bilinear};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropParams {
    pub threshold: u8,
    pub blur_sigma: f64,
    pub erode_iterations: usize,
    pub dilate_iterations: usize,
    /// Output side length.
    pub size: usize,
}

impl Default for CropParams {
    fn default() -> Self {
        Self { threshold: 45, blur_sigma: 1.1, erode_iterations: 2, dilate_iterations: 2, size: 150 }
    }
}

impl CropParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma.is_finite() && self.blur_sigma > 0.0) {
            return Err(Error::Config(format!("blur sigma {} must be positive", self.blur_sigma)));
        }
        if self.size == 0 {
            return Err(Error::Config("crop size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CropOutcome {
    pub image: Rgb8,
    /// Box in source coordinates, before resizing.
    pub bbox: BoundingBox,
    pub fallback: bool,
}

/// Mask of the brain region after smoothing, thresholding and cleaning.
pub fn foreground_mask(img: &Rgb8, params: &CropParams) -> BinaryMask {
    let gray = gaussian_blur5(&to_grayscale(img), params.blur_sigma);
    let mask = threshold(&gray, params.threshold);
    dilate(&erode(&mask, params.erode_iterations), params.dilate_iterations)
}

pub fn crop_pipeline(img: &Rgb8, params: &CropParams) -> Result<CropOutcome> {
    params.validate()?;
    let found = largest_component_bbox(&foreground_mask(img, params));
    if found.fallback {
        log::warn!("no foreground found in {}×{} image; using the full frame", img.width(), img.height());
    }
    Ok(CropOutcome { image: crop_resize(img, &found.bbox, params.size)?, bbox: found.bbox, fallback: found.fallback })
}
