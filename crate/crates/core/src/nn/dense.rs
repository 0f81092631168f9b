//! Fully connected layer, `out = x·W + b` with `W` stored `In×Out`.

use rand::Rng;

use super::conv::glorot_limit;
use crate::error::{Error, Result};
use crate::tensor::{matmul, Op, Scalar, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T = f32> {
    inputs: usize,
    outputs: usize,
    weights: Vec<T>,
    bias: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T = f32> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(inputs: usize, outputs: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config(format!("dense dims must be positive ({inputs}×{outputs})")));
        }
        if weights.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::Shape(format!(
                "dense {inputs}×{outputs} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(Self { inputs, outputs, weights, bias })
    }

    pub fn glorot<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Result<Self> {
        let limit = glorot_limit(inputs, outputs);
        let weights = (0..inputs * outputs).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
        Self::new(inputs, outputs, weights, vec![T::zero(); outputs])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [T]; 2] {
        [&mut self.weights, &mut self.bias]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> DenseLayer<U> {
        DenseLayer {
            inputs: self.inputs,
            outputs: self.outputs,
            weights: self.weights.iter().map(|v| U::of(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<usize> {
        let (n, f) = input.rows_cols()?;
        if f != self.inputs {
            return Err(Error::Shape(format!("dense expects {} inputs, got {f}", self.inputs)));
        }
        Ok(n)
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.check_input(input)?;
        let mut out = Vec::with_capacity(n * self.outputs);
        for _ in 0..n {
            out.extend_from_slice(&self.bias);
        }
        matmul(n, self.inputs, self.outputs, input.data(), Op::Plain, &self.weights, Op::Plain, &mut out, true);
        Tensor::new(vec![n, self.outputs], out)
    }

    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<DenseGrads<T>> {
        let n = self.check_input(input)?;
        if grad_out.shape() != [n, self.outputs] {
            return Err(Error::Shape(format!(
                "dense grad_out {:?}, expected {:?}",
                grad_out.shape(),
                [n, self.outputs]
            )));
        }
        let g = grad_out.data();
        let mut grad_in = vec![T::zero(); n * self.inputs];
        matmul(n, self.outputs, self.inputs, g, Op::Plain, &self.weights, Op::Trans, &mut grad_in, false);
        let mut weights = vec![T::zero(); self.inputs * self.outputs];
        matmul(self.inputs, n, self.outputs, input.data(), Op::Trans, g, Op::Plain, &mut weights, false);
        let mut bias = vec![T::zero(); self.outputs];
        for row in g.chunks(self.outputs) {
            for (b, &v) in bias.iter_mut().zip(row) {
                *b = *b + v;
            }
        }
        Ok(DenseGrads { input: Tensor::new(vec![n, self.inputs], grad_in)?, weights, bias })
    }
}
