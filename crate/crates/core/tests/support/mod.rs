//! Independent oracles shared by the integration and acceptance suites.
//!
//! Nothing here calls into the implementation under test except to obtain
//! scalar loss values for finite differencing.

#![allow(dead_code)]

use rand::Rng;

/// Central-difference gradient of `f` at `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let plus = f(&probe);
            probe[i] = orig - h;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Largest element-wise `|a - n| / max(|a|, |n|)`; pairs that are both
/// below `1e-10` in magnitude count as agreeing.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-10 {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

pub fn random_vec(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..hi)).collect()
}

/// Direct-loop same convolution; padding `(k-1)/2` before, rest after.
pub fn naive_conv(
    input: &[f64],
    (n, h, w, cin): (usize, usize, usize, usize),
    kernel: &[f64],
    bias: &[f64],
    k: usize,
    cout: usize,
) -> Vec<f64> {
    let pad = (k as isize - 1) / 2;
    let mut out = vec![0.0; n * h * w * cout];
    for b in 0..n {
        for y in 0..h as isize {
            for x in 0..w as isize {
                for f in 0..cout {
                    let mut acc = bias[f];
                    for ky in 0..k as isize {
                        for kx in 0..k as isize {
                            let (iy, ix) = (y + ky - pad, x + kx - pad);
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            for c in 0..cin {
                                let v = input[((b * h + iy as usize) * w + ix as usize) * cin + c];
                                let wgt = kernel[((ky as usize * k + kx as usize) * cin + c) * cout + f];
                                acc += v * wgt;
                            }
                        }
                    }
                    out[((b * h + y as usize) * w + x as usize) * cout + f] = acc;
                }
            }
        }
    }
    out
}

/// Direct 2×2/stride-2 window maximum.
pub fn naive_maxpool(input: &[f64], (n, h, w, c): (usize, usize, usize, usize)) -> Vec<f64> {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for y in 0..oh {
            for x in 0..ow {
                for ch in 0..c {
                    let at = |dy: usize, dx: usize| input[((b * h + 2 * y + dy) * w + 2 * x + dx) * c + ch];
                    out.push(at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1)));
                }
            }
        }
    }
    out
}

/// Bilinear sample of an interleaved 8-bit image at a fractional position
/// (pixel-centre convention, coordinates clamped to the frame).
pub fn bilinear_at(px: &[u8], w: usize, h: usize, ch: usize, fx: f64, fy: f64) -> f64 {
    let fx = fx.clamp(0.0, (w - 1) as f64);
    let fy = fy.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let v = |x: usize, y: usize| px[(y * w + x) * 3 + ch] as f64;
    let top = v(x0, y0) * (1.0 - tx) + v(x1, y0) * tx;
    let bottom = v(x0, y1) * (1.0 - tx) + v(x1, y1) * tx;
    top * (1.0 - ty) + bottom * ty
}

/// Resizes `src` (w×h) to `size×size` by sampling every output pixel
/// independently with [`bilinear_at`].
pub fn naive_resize(px: &[u8], w: usize, h: usize, size: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let fx = (x as f64 + 0.5) * w as f64 / size as f64 - 0.5;
            let fy = (y as f64 + 0.5) * h as f64 / size as f64 - 0.5;
            for ch in 0..3 {
                out.push(bilinear_at(px, w, h, ch, fx, fy).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    out
}

/// Per-sample tallies for a C-class problem: (tp, fp, fn, support).
pub fn count_outcomes(truth: &[usize], pred: &[usize], classes: usize) -> Vec<(u64, u64, u64, u64)> {
    let mut out = vec![(0u64, 0u64, 0u64, 0u64); classes];
    for (&t, &p) in truth.iter().zip(pred) {
        out[t].3 += 1;
        if t == p {
            out[t].0 += 1;
        } else {
            out[p].1 += 1;
            out[t].2 += 1;
        }
    }
    out
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// `(precision, recall, f1, support)` per class from raw outcome counts.
pub fn oracle_metrics(truth: &[usize], pred: &[usize], classes: usize) -> Vec<(f64, f64, f64, u64)> {
    count_outcomes(truth, pred, classes)
        .into_iter()
        .map(|(tp, fp, fn_, support)| {
            let p = safe_div(tp as f64, (tp + fp) as f64);
            let r = safe_div(tp as f64, (tp + fn_) as f64);
            (p, r, safe_div(2.0 * p * r, p + r), support)
        })
        .collect()
}

/// Random bright shape on black with salt specks kept clear of it.
/// Returns the RGB bytes and the analytic inclusive bbox
/// `(top, bottom, left, right)` of the shape's pixel set.
pub struct ShapeCase {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub bbox: (usize, usize, usize, usize),
}

pub fn random_shape_case(rng: &mut impl Rng) -> ShapeCase {
    let width = rng.random_range(120..220);
    let height = rng.random_range(120..220);
    let mut inside = vec![false; width * height];
    let (mut top, mut bottom, mut left, mut right) = (usize::MAX, 0, usize::MAX, 0);
    let ellipse = rng.random_bool(0.5);
    let a = rng.random_range(15.0..(width as f64 / 2.0 - 20.0));
    let b = rng.random_range(15.0..(height as f64 / 2.0 - 20.0));
    let cx = rng.random_range(a + 8.0..width as f64 - a - 8.0);
    let cy = rng.random_range(b + 8.0..height as f64 - b - 8.0);
    for y in 0..height {
        for x in 0..width {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            let hit = if ellipse { (dx / a).powi(2) + (dy / b).powi(2) <= 1.0 } else { dx.abs() <= a && dy.abs() <= b };
            if hit {
                inside[y * width + x] = true;
                top = top.min(y);
                bottom = bottom.max(y);
                left = left.min(x);
                right = right.max(x);
            }
        }
    }
    let level: u8 = rng.random_range(150..=255);
    let mut pixels: Vec<u8> = inside.iter().flat_map(|&i| [if i { level } else { 0 }; 3]).collect();

    // salt specks of at most 2 px, at least 6 px from the shape's bbox
    let specks = rng.random_range(0..12);
    let mut placed = 0;
    while placed < specks {
        let (x, y) = (rng.random_range(0..width - 1), rng.random_range(0..height - 1));
        let near = |v: usize, lo: usize, hi: usize| v + 6 >= lo && v <= hi + 6;
        if near(x, left, right) && near(y, top, bottom) {
            continue;
        }
        let mut set = |x: usize, y: usize| pixels[(y * width + x) * 3..][..3].fill(255);
        set(x, y);
        if rng.random_bool(0.5) {
            if rng.random_bool(0.5) {
                set(x + 1, y);
            } else {
                set(x, y + 1);
            }
        }
        placed += 1;
    }
    ShapeCase { width, height, pixels, bbox: (top, bottom, left, right) }
}
