//! Grayscale conversion, Gaussian smoothing and thresholding.

use super::raster::{BinaryMask, Grayscale8, Rgb8};

/// Luma `round(0.299r + 0.587g + 0.114b)`, ties rounded up.
pub fn to_grayscale(img: &Rgb8) -> Grayscale8 {
    let pixels = img
        .pixels()
        .chunks_exact(3)
        .map(|p| ((299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32 + 500) / 1000) as u8)
        .collect();
    Grayscale8::new(img.width(), img.height(), pixels).expect("same dims as the source")
}

/// Normalized 5-tap Gaussian weights for `sigma`.
pub fn gaussian_kernel5(sigma: f64) -> [f64; 5] {
    let mut k = [0.0; 5];
    for (i, w) in k.iter_mut().enumerate() {
        let d = i as f64 - 2.0;
        *w = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.map(|w| w / sum)
}

/// Mirror index without repeating the edge sample (`dcb|abcd|cba`).
pub(crate) fn reflect101(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let last = n as isize - 1;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i;
        } else if i > last {
            i = 2 * last - i;
        } else {
            return i as usize;
        }
    }
}

/// Separable 5×5 Gaussian blur with reflected borders.
pub fn gaussian_blur5(img: &Grayscale8, sigma: f64) -> Grayscale8 {
    let (w, h) = (img.width(), img.height());
    let k = gaussian_kernel5(sigma);
    let src = img.pixels();
    let mut horizontal = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            horizontal[y * w + x] =
                (0..5).map(|t| k[t] * src[y * w + reflect101(x as isize + t as isize - 2, w)] as f64).sum();
        }
    }
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v: f64 = (0..5).map(|t| k[t] * horizontal[reflect101(y as isize + t as isize - 2, h) * w + x]).sum();
            out.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
        }
    }
    Grayscale8::new(w, h, out).expect("same dims as the source")
}

/// Foreground where the pixel is strictly greater than `t`.
pub fn threshold(img: &Grayscale8, t: u8) -> BinaryMask {
    BinaryMask::new(img.width(), img.height(), img.pixels().iter().map(|&v| v > t).collect())
        .expect("same dims as the source")
}
