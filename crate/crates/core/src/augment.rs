//! Seeded on-the-fly augmentation and the `[0, 1]` rescale.
//!
//! Every sample draws its parameters from its own stream keyed by
//! `(global_seed, epoch, sample_index)`, so a batch is reproducible no
//! matter how it is scheduled across threads.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::Rgb8;
use crate::seed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Rotation drawn from `[-max, max]` degrees.
    pub rotation_max_deg: f64,
    /// Brightness factor drawn from `[1 - delta, 1 + delta]`.
    pub brightness_delta: f64,
    /// Horizontal shear factor drawn from `[-max, max]`.
    pub shear_max: f64,
    /// Translation drawn from `[-frac·dim, frac·dim]` on each axis.
    pub shift_frac: f64,
    pub hflip_enabled: bool,
    pub rescale: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            rotation_max_deg: 10.0,
            brightness_delta: 0.15,
            shear_max: 0.125,
            shift_frac: 0.002,
            hflip_enabled: true,
            rescale: 1.0 / 255.0,
        }
    }
}

impl AugmentConfig {
    /// All ranges zero and flipping off.
    pub fn identity() -> Self {
        Self {
            rotation_max_deg: 0.0,
            brightness_delta: 0.0,
            shear_max: 0.0,
            shift_frac: 0.0,
            hflip_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("rotation_max_deg", self.rotation_max_deg),
            ("brightness_delta", self.brightness_delta),
            ("shear_max", self.shear_max),
            ("shift_frac", self.shift_frac),
        ];
        for (name, v) in ranges {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be finite and non-negative")));
            }
        }
        if self.brightness_delta >= 1.0 {
            return Err(Error::Config(format!("brightness_delta {} must be < 1", self.brightness_delta)));
        }
        if !(self.rescale.is_finite() && self.rescale > 0.0) {
            return Err(Error::Config(format!("rescale {} must be positive", self.rescale)));
        }
        Ok(())
    }
}

/// One concrete draw of the augmentation parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub angle_deg: f64,
    pub brightness: f64,
    pub shear: f64,
    pub dx: f64,
    pub dy: f64,
    pub flip: bool,
}

impl AugmentParams {
    pub fn identity() -> Self {
        Self { angle_deg: 0.0, brightness: 1.0, shear: 0.0, dx: 0.0, dy: 0.0, flip: false }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    // exact zero when the range is degenerate
    half_width * (2.0 * rng.random::<f64>() - 1.0)
}

/// Draws every field uniformly from its interval; flips with probability ½.
pub fn sample_params<R: Rng + ?Sized>(cfg: &AugmentConfig, width: usize, height: usize, rng: &mut R) -> AugmentParams {
    let angle_deg = uniform(rng, cfg.rotation_max_deg);
    let brightness = 1.0 + uniform(rng, cfg.brightness_delta);
    let shear = uniform(rng, cfg.shear_max);
    let dx = uniform(rng, cfg.shift_frac * width as f64);
    let dy = uniform(rng, cfg.shift_frac * height as f64);
    let flip = cfg.hflip_enabled && rng.random_bool(0.5);
    AugmentParams { angle_deg, brightness, shear, dx, dy, flip }
}

/// Per-sample stream seed.
pub fn stream_seed(global_seed: u64, epoch: u64, sample_index: u64) -> u64 {
    seed::mix(&[global_seed, epoch, sample_index, seed::tag::AUGMENT])
}

/// Forward map about the image centre: flip, then rotate, then shear, then
/// translate. Returned as the 2×2 linear part (row-major).
fn linear_part(p: &AugmentParams) -> [f64; 4] {
    let (s, c) = p.angle_deg.to_radians().sin_cos();
    let f = if p.flip { -1.0 } else { 1.0 };
    // R · Sh · F with Sh = [[1, shear], [0, 1]], F = diag(f, 1)
    [c * f, c * p.shear - s, s * f, s * p.shear + c]
}

/// Where the source point `(x, y)` lands under the forward map.
pub fn map_point(p: &AugmentParams, width: usize, height: usize, x: f64, y: f64) -> (f64, f64) {
    let [a, b, c, d] = linear_part(p);
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let (ux, uy) = (x - cx, y - cy);
    (a * ux + b * uy + cx + p.dx, c * ux + d * uy + cy + p.dy)
}

/// Resamples `img` under the affine part of `p` (bilinear, edge-clamped).
pub fn apply_affine(img: &Rgb8, p: &AugmentParams) -> Rgb8 {
    let (w, h) = (img.width(), img.height());
    let [a, b, c, d] = linear_part(p);
    let det = a * d - b * c;
    let inv = [d / det, -b / det, -c / det, a / det];
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let src = img.pixels();
    let mut out = Vec::with_capacity(w * h * 3);
    for qy in 0..h {
        for qx in 0..w {
            let (ux, uy) = (qx as f64 - cx - p.dx, qy as f64 - cy - p.dy);
            let sx = (inv[0] * ux + inv[1] * uy + cx).clamp(0.0, (w - 1) as f64);
            let sy = (inv[2] * ux + inv[3] * uy + cy).clamp(0.0, (h - 1) as f64);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (tx, ty) = (sx - x0 as f64, sy - y0 as f64);
            for ch in 0..3 {
                let at = |x: usize, y: usize| src[(y * w + x) * 3 + ch] as f64;
                let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * tx;
                let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * tx;
                out.push((top + (bottom - top) * ty + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Rgb8::new(w, h, out).expect("same dims as the source")
}

/// `round(v · factor)` clamped to `[0, 255]`.
pub fn apply_brightness(img: &Rgb8, factor: f64) -> Rgb8 {
    let mut out = img.clone();
    for v in out.pixels_mut() {
        *v = (*v as f64 * factor).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Full per-sample augmentation (affine, then brightness) for one draw.
pub fn augment_image(img: &Rgb8, cfg: &AugmentConfig, global_seed: u64, epoch: u64, sample_index: u64) -> Rgb8 {
    let mut rng = seed::Stream::seed_from_u64(stream_seed(global_seed, epoch, sample_index));
    let p = sample_params(cfg, img.width(), img.height(), &mut rng);
    apply_brightness(&apply_affine(img, &p), p.brightness)
}

fn check_size(img: &Rgb8, size: usize) -> Result<()> {
    if img.width() != size || img.height() != size {
        return Err(Error::Shape(format!("expected a {size}×{size} image, got {}×{}", img.width(), img.height())));
    }
    Ok(())
}

fn rescale_into(dst: &mut [f32], src: &[u8], scale: f64) {
    for (d, &v) in dst.iter_mut().zip(src) {
        *d = (v as f64 * scale) as f32;
    }
}

/// `v / 255` per channel, as an `H×W×3` tensor.
pub fn normalize(img: &Rgb8, size: usize) -> Result<Tensor> {
    check_size(img, size)?;
    let mut data = vec![0.0f32; size * size * 3];
    rescale_into(&mut data, img.pixels(), 1.0 / 255.0);
    Tensor::new(vec![size, size, 3], data)
}

/// Builds an `N×size×size×3` batch. Each item carries its stable dataset
/// index, which keys its augmentation stream.
pub fn augment_batch(
    items: &[(u64, &Rgb8)],
    cfg: &AugmentConfig,
    global_seed: u64,
    epoch: u64,
    training: bool,
    size: usize,
) -> Result<Tensor> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    for (_, img) in items {
        check_size(img, size)?;
    }
    let per = size * size * 3;
    let mut data = vec![0.0f32; items.len() * per];
    data.par_chunks_mut(per).zip(items.par_iter()).for_each(|(dst, &(index, img))| {
        let augmented;
        let src = if training {
            augmented = augment_image(img, cfg, global_seed, epoch, index);
            &augmented
        } else {
            img
        };
        rescale_into(dst, src.pixels(), cfg.rescale);
    });
    Tensor::new(vec![items.len(), size, size, 3], data)
}
