//! Synthetic four-class image generator for fixtures and sanity runs.
//!
//! Every image is a noisy grey ellipse on black (so contour cropping has
//! something to find) carrying one class-specific pattern:
//! glioma → bright disc, meningioma → horizontal stripes, notumor → plain,
//! pituitary → dark cross.

use std::path::Path;

use rand::Rng;

use crate::dataset::{ClassLabel, LoadedSet, Sample};
use crate::error::{Error, Result};
use crate::preprocess::Rgb8;
use crate::seed;

/// Renders one `size×size` image of `class`, deterministic in `seed_value`.
pub fn synthetic_image(class: ClassLabel, seed_value: u64, size: usize) -> Result<Rgb8> {
    if size < 16 {
        return Err(Error::InvalidArgument(format!("synthetic images need size ≥ 16, got {size}")));
    }
    let mut rng = seed::stream(&[seed_value, class.index() as u64]);
    let s = size as f64;
    let (cx, cy) = (s * rng.random_range(0.45..0.55), s * rng.random_range(0.45..0.55));
    let (rx, ry) = (s * rng.random_range(0.32..0.42), s * rng.random_range(0.32..0.42));
    let base = rng.random_range(90.0..130.0);
    let (px, py) = (cx + rx * rng.random_range(-0.3..0.3), cy + ry * rng.random_range(-0.3..0.3));
    let blob = s * rng.random_range(0.08..0.13);
    let period = s * rng.random_range(0.09..0.12);
    let phase = rng.random_range(0.0..period);
    let bar = s * rng.random_range(0.035..0.05);
    let noise: Vec<f64> = (0..size * size).map(|_| rng.random_range(-12.0..12.0)).collect();

    Rgb8::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let inside = ((fx - cx) / rx).powi(2) + ((fy - cy) / ry).powi(2) <= 1.0;
        if !inside {
            return [0, 0, 0];
        }
        let mut v = base + noise[y * size + x];
        match class {
            ClassLabel::Glioma => {
                if (fx - px).hypot(fy - py) <= blob {
                    v += 110.0;
                }
            }
            ClassLabel::Meningioma => {
                if ((fy + phase) / period).fract() < 0.5 {
                    v += 80.0;
                }
            }
            ClassLabel::Notumor => {}
            ClassLabel::Pituitary => {
                if (fx - px).abs() <= bar || (fy - py).abs() <= bar {
                    v -= 70.0;
                }
            }
        }
        let g = v.clamp(0.0, 255.0) as u8;
        [g, g, g]
    })
}

/// Seed of the `i`-th image of a class within a set keyed by `seed_value`.
fn image_seed(seed_value: u64, i: usize) -> u64 {
    seed::mix(&[seed_value, i as u64])
}

/// In-memory set with `per_class` images of each class, in class order.
pub fn synthetic_set(per_class: usize, seed_value: u64, size: usize) -> Result<LoadedSet> {
    let mut samples = Vec::with_capacity(per_class * ClassLabel::ALL.len());
    let mut images = Vec::with_capacity(samples.capacity());
    for class in ClassLabel::ALL {
        for i in 0..per_class {
            samples.push(Sample { path: format!("{}/{i:04}.png", class.name()).into(), label: class });
            images.push(synthetic_image(class, image_seed(seed_value, i), size)?);
        }
    }
    LoadedSet::from_images(samples, images, size)
}

/// Writes `root/<class>/<nnnn>.png` with `per_class` images per class.
pub fn write_fixture_tree(root: impl AsRef<Path>, per_class: usize, seed_value: u64, size: usize) -> Result<()> {
    let root = root.as_ref();
    for class in ClassLabel::ALL {
        let dir = root.join(class.name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for i in 0..per_class {
            synthetic_image(class, image_seed(seed_value, i), size)?.save_png(dir.join(format!("{i:04}.png")))?;
        }
    }
    Ok(())
}
