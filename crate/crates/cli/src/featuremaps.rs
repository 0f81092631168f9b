//! Tiling conv activations into greyscale grids.

use anyhow::{ensure, Result};
use lwcnn_core::preprocess::Grayscale8;
use lwcnn_core::Tensor;

/// Columns and rows of the near-square grid holding `tiles` tiles.
pub fn grid_shape(tiles: usize) -> (usize, usize) {
    let cols = (tiles as f64).sqrt().ceil().max(1.0) as usize;
    (cols, tiles.div_ceil(cols))
}

/// Min-max scales one channel to `0..=255`; a constant channel maps to 0.
pub fn normalize_channel(values: &[f32]) -> Vec<u8> {
    let (lo, hi) = values.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if hi <= lo {
        return vec![0; values.len()];
    }
    let scale = 255.0 / (hi - lo) as f64;
    values.iter().map(|&v| ((v - lo) as f64 * scale).round().clamp(0.0, 255.0) as u8).collect()
}

/// Lays the channels of the first item of an `N×H×W×C` activation out
/// row-major, one `H×W` tile per channel; unused cells stay black.
pub fn tile_channels(activation: &Tensor) -> Result<Grayscale8> {
    let (n, h, w, c) = activation.nhwc()?;
    ensure!(n >= 1, "activation has an empty batch");
    let (cols, rows) = grid_shape(c);
    let item = &activation.data()[..h * w * c];
    let mut canvas = vec![0u8; rows * h * cols * w];
    for ch in 0..c {
        let channel: Vec<f32> = item.iter().skip(ch).step_by(c).copied().collect();
        let tile = normalize_channel(&channel);
        let (ty, tx) = (ch / cols, ch % cols);
        for y in 0..h {
            let dst = (ty * h + y) * cols * w + tx * w;
            canvas[dst..dst + w].copy_from_slice(&tile[y * w..(y + 1) * w]);
        }
    }
    Ok(Grayscale8::new(cols * w, rows * h, canvas)?)
}
