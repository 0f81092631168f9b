//! Inverted dropout.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")))
    }
}

/// Returns the output and the scaled mask (`0` or `1/(1-rate)` per element).
///
/// In inference mode the mask is all ones and the output equals the input.
pub fn dropout_forward<T: Scalar, R: Rng + ?Sized>(
    input: &Tensor<T>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Tensor<T>, Vec<T>)> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok((input.clone(), vec![T::one(); input.len()]));
    }
    let keep = T::of(1.0 / (1.0 - rate));
    let mask: Vec<T> = (0..input.len()).map(|_| if rng.random::<f64>() >= rate { keep } else { T::zero() }).collect();
    let mut out = input.clone();
    for (v, &m) in out.data_mut().iter_mut().zip(&mask) {
        *v = *v * m;
    }
    Ok((out, mask))
}

pub fn dropout_backward<T: Scalar>(grad: &Tensor<T>, mask: &[T]) -> Result<Tensor<T>> {
    if grad.len() != mask.len() {
        return Err(Error::Shape(format!("dropout grad has {} elements, mask {}", grad.len(), mask.len())));
    }
    let mut out = grad.clone();
    for (g, &m) in out.data_mut().iter_mut().zip(mask) {
        *g = *g * m;
    }
    Ok(out)
}
