//! 2×2 max pooling, stride 2, no padding (odd trailing rows/columns dropped).

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Argmax positions recorded by the forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct PoolCache {
    input_shape: Vec<usize>,
    /// Flat input index of the maximum for every output element.
    argmax: Vec<usize>,
}

impl PoolCache {
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }
}

pub fn pooled_dim(d: usize) -> usize {
    d / 2
}

pub fn maxpool2_forward<T: Scalar>(input: &Tensor<T>) -> Result<(Tensor<T>, PoolCache)> {
    let (n, h, w, c) = input.nhwc()?;
    if h < 2 || w < 2 {
        return Err(Error::Shape(format!("max-pool needs spatial dims >= 2, got {h}×{w}")));
    }
    let (oh, ow) = (pooled_dim(h), pooled_dim(w));
    let src = input.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best_idx = ((b * h + 2 * oy) * w + 2 * ox) * c + ch;
                    let mut best = src[best_idx];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = ((b * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if src[idx] > best {
                            best = src[idx];
                            best_idx = idx;
                        }
                    }
                    out.push(best);
                    argmax.push(best_idx);
                }
            }
        }
    }
    let cache = PoolCache { input_shape: input.shape().to_vec(), argmax };
    Ok((Tensor::new(vec![n, oh, ow, c], out)?, cache))
}

pub fn maxpool2_backward<T: Scalar>(grad_out: &Tensor<T>, cache: &PoolCache) -> Result<Tensor<T>> {
    if grad_out.len() != cache.argmax.len() {
        return Err(Error::Shape(format!(
            "pool grad has {} elements, cache recorded {}",
            grad_out.len(),
            cache.argmax.len()
        )));
    }
    let mut grad_in = Tensor::zeros(cache.input_shape.clone())?;
    let dst = grad_in.data_mut();
    for (&idx, &g) in cache.argmax.iter().zip(grad_out.data()) {
        dst[idx] = dst[idx] + g;
    }
    Ok(grad_in)
}
