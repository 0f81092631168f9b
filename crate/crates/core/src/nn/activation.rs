//! Rectified linear unit.

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    relu_in_place(&mut out);
    out
}

pub(crate) fn relu_in_place<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        *v = v.max(T::zero());
    }
}

/// Passes `grad` where `input > 0`; the subgradient at exactly zero is zero.
///
/// `input` may equally be the forward output, since both are positive at
/// the same positions.
pub fn relu_backward<T: Scalar>(input: &Tensor<T>, grad: &Tensor<T>) -> Result<Tensor<T>> {
    if input.shape() != grad.shape() {
        return Err(Error::Shape(format!("relu grad {:?} vs input {:?}", grad.shape(), input.shape())));
    }
    let mut out = grad.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(out)
}
