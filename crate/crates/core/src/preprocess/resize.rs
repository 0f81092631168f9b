//! Cropping and bilinear resampling.
//!
//! Output pixel centres map to source coordinates `(i + 0.5)·in/out − 0.5`,
//! clamped to the frame, so equal sizes reproduce the input exactly.

use super::raster::{BoundingBox, Rgb8};
use crate::error::Result;

struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn taps(input: usize, output: usize) -> Vec<Tap> {
    let scale = input as f64 / output as f64;
    (0..output)
        .map(|i| {
            let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
            let lo = src.floor() as usize;
            Tap { lo, hi: (lo + 1).min(input - 1), frac: src - lo as f64 }
        })
        .collect()
}

pub fn resize_bilinear(img: &Rgb8, out_w: usize, out_h: usize) -> Result<Rgb8> {
    let (xs, ys) = (taps(img.width(), out_w), taps(img.height(), out_h));
    let (src, w) = (img.pixels(), img.width());
    let mut out = Vec::with_capacity(out_w * out_h * 3);
    for ty in &ys {
        for tx in &xs {
            for c in 0..3 {
                let at = |x: usize, y: usize| src[(y * w + x) * 3 + c] as f64;
                let top = at(tx.lo, ty.lo) + (at(tx.hi, ty.lo) - at(tx.lo, ty.lo)) * tx.frac;
                let bottom = at(tx.lo, ty.hi) + (at(tx.hi, ty.hi) - at(tx.lo, ty.hi)) * tx.frac;
                let v = top + (bottom - top) * ty.frac;
                out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Rgb8::new(out_w, out_h, out)
}

pub fn crop(img: &Rgb8, bbox: &BoundingBox) -> Result<Rgb8> {
    bbox.validate(img.width(), img.height())?;
    Rgb8::from_fn(bbox.width(), bbox.height(), |x, y| img.get(bbox.left + x, bbox.top + y))
}

/// Crops the inclusive box and stretches it to `size×size`.
pub fn crop_resize(img: &Rgb8, bbox: &BoundingBox, size: usize) -> Result<Rgb8> {
    resize_bilinear(&crop(img, bbox)?, size, size)
}
