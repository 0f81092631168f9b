//! Stride-1 "same" convolution via im2col and GEMM.
//!
//! Kernels are stored `k×k×Cin×Cout` row-major, which is exactly the
//! `(k·k·Cin)×Cout` weight matrix of the im2col product. For even `k` the
//! implicit zero padding is split `(k-1)/2` before and the rest after.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{matmul, Op, Scalar, Tensor};

/// Padding `(before, after)` that keeps the spatial size for kernel `k`.
pub fn same_padding(k: usize) -> (usize, usize) {
    let before = (k - 1) / 2;
    (before, k - 1 - before)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer<T = f32> {
    kernel_size: usize,
    in_channels: usize,
    out_channels: usize,
    kernel: Vec<T>,
    bias: Vec<T>,
}

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Clone, Debug)]
pub struct ConvGrads<T = f32> {
    pub input: Option<Tensor<T>>,
    pub kernel: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        kernel: Vec<T>,
        bias: Vec<T>,
    ) -> Result<Self> {
        if kernel_size == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::Config(format!(
                "conv dims must be positive (k={kernel_size}, cin={in_channels}, cout={out_channels})"
            )));
        }
        let expected = kernel_size * kernel_size * in_channels * out_channels;
        if kernel.len() != expected || bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "conv expects {expected} kernel and {out_channels} bias values, got {} and {}",
                kernel.len(),
                bias.len()
            )));
        }
        Ok(Self { kernel_size, in_channels, out_channels, kernel, bias })
    }

    /// Glorot-uniform kernel, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let area = kernel_size * kernel_size;
        let limit = glorot_limit(area * in_channels, area * out_channels);
        let len = area * in_channels * out_channels;
        let kernel = (0..len).map(|_| T::of(rng.random_range(-limit..=limit))).collect();
        Self::new(kernel_size, in_channels, out_channels, kernel, vec![T::zero(); out_channels])
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub(crate) fn params_mut(&mut self) -> [&mut [T]; 2] {
        [&mut self.kernel, &mut self.bias]
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    pub fn cast<U: Scalar>(&self) -> ConvLayer<U> {
        ConvLayer {
            kernel_size: self.kernel_size,
            in_channels: self.in_channels,
            out_channels: self.out_channels,
            kernel: self.kernel.iter().map(|v| U::of(v.as_f64())).collect(),
            bias: self.bias.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<(usize, usize, usize)> {
        let (n, h, w, c) = input.nhwc()?;
        if c != self.in_channels {
            return Err(Error::Shape(format!("conv expects {} input channels, got {c}", self.in_channels)));
        }
        Ok((n, h, w))
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, h, w) = self.check_input(input)?;
        let hw = h * w;
        let cols_len = self.kernel_size * self.kernel_size * self.in_channels;
        let mut out = vec![T::zero(); n * hw * self.out_channels];
        out.par_chunks_mut(hw * self.out_channels).zip(input.data().par_chunks(hw * self.in_channels)).for_each(
            |(dst, src)| {
                let mut cols = vec![T::zero(); hw * cols_len];
                im2col(src, h, w, self.in_channels, self.kernel_size, &mut cols);
                for row in dst.chunks_mut(self.out_channels) {
                    row.copy_from_slice(&self.bias);
                }
                matmul(hw, cols_len, self.out_channels, &cols, Op::Plain, &self.kernel, Op::Plain, dst, true);
            },
        );
        Tensor::new(vec![n, h, w, self.out_channels], out)
    }

    /// Gradients given the forward input and the upstream gradient.
    pub fn backward(&self, input: &Tensor<T>, grad_out: &Tensor<T>) -> Result<ConvGrads<T>> {
        self.backward_impl(input, grad_out, true)
    }

    pub(crate) fn backward_impl(
        &self,
        input: &Tensor<T>,
        grad_out: &Tensor<T>,
        need_input: bool,
    ) -> Result<ConvGrads<T>> {
        let (n, h, w) = self.check_input(input)?;
        if grad_out.shape() != [n, h, w, self.out_channels] {
            return Err(Error::Shape(format!(
                "conv grad_out {:?} does not match output {:?}",
                grad_out.shape(),
                [n, h, w, self.out_channels]
            )));
        }
        let hw = h * w;
        let (k, cin, cout) = (self.kernel_size, self.in_channels, self.out_channels);
        let cols_len = k * k * cin;

        let per_sample = |src: &[T], g: &[T], dst: Option<&mut [T]>| {
            let mut cols = vec![T::zero(); hw * cols_len];
            im2col(src, h, w, cin, k, &mut cols);
            let mut dk = vec![T::zero(); cols_len * cout];
            matmul(cols_len, hw, cout, &cols, Op::Trans, g, Op::Plain, &mut dk, false);
            let mut db = vec![T::zero(); cout];
            for row in g.chunks(cout) {
                for (acc, &v) in db.iter_mut().zip(row) {
                    *acc = *acc + v;
                }
            }
            if let Some(dst) = dst {
                // reuse the column buffer for d(cols) = g · Kᵀ
                matmul(hw, cout, cols_len, g, Op::Plain, &self.kernel, Op::Trans, &mut cols, false);
                col2im(&cols, h, w, cin, k, dst);
            }
            (dk, db)
        };

        let mut grad_input = need_input.then(|| vec![T::zero(); n * hw * cin]);
        let partials: Vec<(Vec<T>, Vec<T>)> = match grad_input.as_mut() {
            Some(gi) => gi
                .par_chunks_mut(hw * cin)
                .zip(input.data().par_chunks(hw * cin))
                .zip(grad_out.data().par_chunks(hw * cout))
                .map(|((dst, src), g)| per_sample(src, g, Some(dst)))
                .collect(),
            None => input
                .data()
                .par_chunks(hw * cin)
                .zip(grad_out.data().par_chunks(hw * cout))
                .map(|(src, g)| per_sample(src, g, None))
                .collect(),
        };

        // fixed summation order keeps results independent of thread count
        let mut kernel = vec![T::zero(); cols_len * cout];
        let mut bias = vec![T::zero(); cout];
        for (dk, db) in &partials {
            for (a, &v) in kernel.iter_mut().zip(dk) {
                *a = *a + v;
            }
            for (a, &v) in bias.iter_mut().zip(db) {
                *a = *a + v;
            }
        }
        let input = match grad_input {
            Some(gi) => Some(Tensor::new(vec![n, h, w, cin], gi)?),
            None => None,
        };
        Ok(ConvGrads { input, kernel, bias })
    }
}

pub(crate) fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Unfolds one `h×w×cin` image into `(h·w)×(k·k·cin)` patch rows.
fn im2col<T: Scalar>(src: &[T], h: usize, w: usize, cin: usize, k: usize, cols: &mut [T]) {
    let (pad, _) = same_padding(k);
    let row_len = k * k * cin;
    for y in 0..h {
        for x in 0..w {
            let row = &mut cols[(y * w + x) * row_len..][..row_len];
            for ky in 0..k {
                let iy = (y + ky) as isize - pad as isize;
                for kx in 0..k {
                    let ix = (x + kx) as isize - pad as isize;
                    let dst = &mut row[(ky * k + kx) * cin..][..cin];
                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                        dst.fill(T::zero());
                    } else {
                        let off = (iy as usize * w + ix as usize) * cin;
                        dst.copy_from_slice(&src[off..off + cin]);
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch rows back, summing overlaps.
fn col2im<T: Scalar>(cols: &[T], h: usize, w: usize, cin: usize, k: usize, dst: &mut [T]) {
    let (pad, _) = same_padding(k);
    let row_len = k * k * cin;
    for y in 0..h {
        for x in 0..w {
            let row = &cols[(y * w + x) * row_len..][..row_len];
            for ky in 0..k {
                let iy = (y + ky) as isize - pad as isize;
                if iy < 0 || iy >= h as isize {
                    continue;
                }
                for kx in 0..k {
                    let ix = (x + kx) as isize - pad as isize;
                    if ix < 0 || ix >= w as isize {
                        continue;
                    }
                    let off = (iy as usize * w + ix as usize) * cin;
                    for (d, &v) in dst[off..off + cin].iter_mut().zip(&row[(ky * k + kx) * cin..][..cin]) {
                        *d = *d + v;
                    }
                }
            }
        }
    }
}
