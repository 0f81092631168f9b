//! Adamax: Adam with an infinity-norm second moment.
//!
//! ```text
//! t ← t + 1
//! m ← β1·m + (1 − β1)·g
//! u ← max(β2·u, |g|)
//! θ ← θ − (α / (1 − β1ᵗ)) · m / (u + ε)
//! ```

use crate::error::{Error, Result};
use crate::tensor::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct AdamaxState<T = f32> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<Vec<T>>,
    u: Vec<Vec<T>>,
}

impl<T: Scalar> AdamaxState<T> {
    /// Zeroed moments for parameter buffers of the given lengths.
    pub fn new(learning_rate: f64, lens: &[usize]) -> Self {
        Self {
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
            step: 0,
            m: lens.iter().map(|&l| vec![T::zero(); l]).collect(),
            u: lens.iter().map(|&l| vec![T::zero(); l]).collect(),
        }
    }

    pub fn for_params(learning_rate: f64, params: &[&[T]]) -> Self {
        let lens: Vec<usize> = params.iter().map(|p| p.len()).collect();
        Self::new(learning_rate, &lens)
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[Vec<T>] {
        &self.m
    }

    pub fn infinity_norm(&self) -> &[Vec<T>] {
        &self.u
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "optimizer tracks {} buffers, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(Error::Shape(format!(
                    "buffer {i}: state {} vs param {} vs grad {}",
                    m.len(),
                    p.len(),
                    g.len()
                )));
            }
        }
        self.step += 1;
        let b1 = T::of(self.beta1);
        let one_minus_b1 = T::of(1.0 - self.beta1);
        let b2 = T::of(self.beta2);
        let eps = T::of(self.epsilon);
        let rate = T::of(self.learning_rate / (1.0 - self.beta1.powi(self.step as i32)));
        for (((p, g), m), u) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.u) {
            for (((theta, &grad), m), u) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(u.iter_mut()) {
                *m = b1 * *m + one_minus_b1 * grad;
                *u = (b2 * *u).max(grad.abs());
                *theta = *theta - rate * *m / (*u + eps);
            }
        }
        Ok(())
    }
}
