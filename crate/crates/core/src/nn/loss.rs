//! Softmax with categorical cross-entropy.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

/// Probabilities are clipped to `[CLIP, 1 - CLIP]` inside the logarithm.
pub const PROB_CLIP: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SoftmaxCe<T = f32> {
    pub probs: Tensor<T>,
    /// Batch-mean cross-entropy.
    pub loss: T,
    /// `(probs - onehot) / N`.
    pub grad_logits: Tensor<T>,
}

/// Row-wise softmax with max subtraction.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, c) = logits.rows_cols()?;
    let mut probs = logits.clone();
    for row in probs.data_mut().chunks_mut(c) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut sum = T::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    Ok(probs)
}

/// Mean of `-ln(clip(p_label))` over rows of `probs`.
pub fn cross_entropy<T: Scalar>(probs: &Tensor<T>, onehot: &Tensor<T>) -> Result<T> {
    let (n, c) = check_pair(probs, onehot)?;
    let (lo, hi) = (T::of(PROB_CLIP), T::of(1.0 - PROB_CLIP));
    let mut total = T::zero();
    for (p_row, y_row) in probs.data().chunks(c).zip(onehot.data().chunks(c)) {
        for (&p, &y) in p_row.iter().zip(y_row) {
            if y != T::zero() {
                total = total - y * p.max(lo).min(hi).ln();
            }
        }
    }
    Ok(total / T::of(n as f64))
}

pub fn softmax_ce<T: Scalar>(logits: &Tensor<T>, onehot: &Tensor<T>) -> Result<SoftmaxCe<T>> {
    let (n, _) = check_pair(logits, onehot)?;
    let probs = softmax(logits)?;
    let loss = cross_entropy(&probs, onehot)?;
    let scale = T::of(1.0 / n as f64);
    let mut grad = probs.clone();
    for (g, &y) in grad.data_mut().iter_mut().zip(onehot.data()) {
        *g = (*g - y) * scale;
    }
    Ok(SoftmaxCe { probs, loss, grad_logits: grad })
}

fn check_pair<T: Scalar>(a: &Tensor<T>, onehot: &Tensor<T>) -> Result<(usize, usize)> {
    let (n, c) = a.rows_cols()?;
    if onehot.shape() != [n, c] {
        return Err(Error::Shape(format!("labels {:?} do not match logits {:?}", onehot.shape(), a.shape())));
    }
    for (i, row) in onehot.data().chunks(c).enumerate() {
        let ones = row.iter().filter(|&&v| v == T::one()).count();
        let zeros = row.iter().filter(|&&v| v == T::zero()).count();
        if ones != 1 || zeros != c - 1 {
            return Err(Error::InvalidArgument(format!("label row {i} is not one-hot")));
        }
    }
    Ok((n, c))
}
