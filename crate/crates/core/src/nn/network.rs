//! The fixed four-block CNN and its hyperparameters.
//!
//! Layer stack: `[conv → relu → maxpool2] × 4 → flatten → dense → relu →
//! dropout → dense(4)`, with softmax folded into the loss.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::activation::{relu_backward, relu_in_place};
use super::conv::ConvLayer;
use super::dense::DenseLayer;
use super::dropout::{check_rate, dropout_backward, dropout_forward};
use super::loss::softmax;
use super::pool::{maxpool2_backward, maxpool2_forward, pooled_dim, PoolCache};
use crate::error::{Error, Result};
use crate::seed;
use crate::tensor::{Scalar, Tensor};

pub const NUM_CLASSES: usize = 4;
pub const INPUT_CHANNELS: usize = 3;
pub const DEFAULT_INPUT_SIZE: usize = 150;
pub const CONV_BLOCKS: usize = 4;
pub const ALLOWED_KERNELS: [usize; 2] = [3, 4];

/// Hyperparameters defining one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub filters: [usize; CONV_BLOCKS],
    pub kernels: [usize; CONV_BLOCKS],
    pub dense_units: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    /// Side length of the square RGB input.
    pub input_size: usize,
}

impl Default for NetworkConfig {
    /// The initial hand-designed architecture.
    fn default() -> Self {
        Self {
            filters: [32, 128, 128, 128],
            kernels: [3, 4, 3, 3],
            dense_units: 384,
            dropout_rate: 0.3,
            learning_rate: 9.534e-4,
            input_size: DEFAULT_INPUT_SIZE,
        }
    }
}

impl NetworkConfig {
    /// Best configuration found by the hyperparameter search.
    pub fn tuned() -> Self {
        Self {
            filters: [32, 64, 128, 128],
            kernels: [4, 3, 3, 4],
            dense_units: 512,
            dropout_rate: 0.5,
            learning_rate: 1.19e-3,
            input_size: DEFAULT_INPUT_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.filters.iter().position(|&f| f == 0) {
            return Err(Error::Config(format!("conv layer {} has zero filters", i + 1)));
        }
        if let Some(k) = self.kernels.iter().find(|k| !ALLOWED_KERNELS.contains(k)) {
            return Err(Error::Config(format!("kernel size {k} not in {ALLOWED_KERNELS:?}")));
        }
        if self.dense_units == 0 {
            return Err(Error::Config("dense_units must be positive".into()));
        }
        check_rate(self.dropout_rate)?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        let mut side = self.input_size;
        for _ in 0..CONV_BLOCKS {
            if side < 2 {
                return Err(Error::Config(format!(
                    "input size {} too small for {CONV_BLOCKS} pooling stages",
                    self.input_size
                )));
            }
            side = pooled_dim(side);
        }
        Ok(())
    }

    /// Spatial side length entering each conv block, then after the last pool.
    pub fn spatial_trace(&self) -> [usize; CONV_BLOCKS + 1] {
        let mut trace = [self.input_size; CONV_BLOCKS + 1];
        for i in 1..=CONV_BLOCKS {
            trace[i] = pooled_dim(trace[i - 1]);
        }
        trace
    }

    pub fn flatten_len(&self) -> usize {
        let side = self.spatial_trace()[CONV_BLOCKS];
        side * side * self.filters[CONV_BLOCKS - 1]
    }
}

/// Closed-form trainable parameter count.
pub fn param_count(config: &NetworkConfig) -> Result<usize> {
    config.validate()?;
    let mut total = 0;
    let mut cin = INPUT_CHANNELS;
    for (&f, &k) in config.filters.iter().zip(&config.kernels) {
        total += k * k * cin * f + f;
        cin = f;
    }
    total += config.flatten_len() * config.dense_units + config.dense_units;
    total += config.dense_units * NUM_CLASSES + NUM_CLASSES;
    Ok(total)
}

/// Saved state of one conv block.
#[derive(Clone, Debug)]
struct BlockCache<T> {
    input: Tensor<T>,
    activation: Tensor<T>,
    pool: PoolCache,
}

/// Intermediate values retained by a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T = f32> {
    blocks: Vec<BlockCache<T>>,
    flat: Tensor<T>,
    hidden: Tensor<T>,
    mask: Vec<T>,
    dropped: Tensor<T>,
}

/// Parameter gradients in [`Network::params`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T = f32> {
    pub slots: Vec<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn as_slices(&self) -> Vec<&[T]> {
        self.slots.iter().map(Vec::as_slice).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T = f32> {
    config: NetworkConfig,
    convs: Vec<ConvLayer<T>>,
    hidden: DenseLayer<T>,
    output: DenseLayer<T>,
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights and zero biases, deterministic in `seed`.
    pub fn build(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = seed::stream(&[seed, seed::tag::INIT]);
        let mut convs = Vec::with_capacity(CONV_BLOCKS);
        let mut cin = INPUT_CHANNELS;
        for (&f, &k) in config.filters.iter().zip(&config.kernels) {
            convs.push(ConvLayer::glorot(k, cin, f, &mut rng)?);
            cin = f;
        }
        let hidden = DenseLayer::glorot(config.flatten_len(), config.dense_units, &mut rng)?;
        let output = DenseLayer::glorot(config.dense_units, NUM_CLASSES, &mut rng)?;
        Ok(Self { config: config.clone(), convs, hidden, output })
    }

    /// Assembles a network from explicit layers, checking that they chain.
    pub fn from_layers(
        config: &NetworkConfig,
        convs: Vec<ConvLayer<T>>,
        hidden: DenseLayer<T>,
        output: DenseLayer<T>,
    ) -> Result<Self> {
        config.validate()?;
        if convs.len() != CONV_BLOCKS {
            return Err(Error::Shape(format!("expected {CONV_BLOCKS} conv layers, got {}", convs.len())));
        }
        let mut cin = INPUT_CHANNELS;
        for (i, c) in convs.iter().enumerate() {
            if c.in_channels() != cin || c.out_channels() != config.filters[i] || c.kernel_size() != config.kernels[i] {
                return Err(Error::Shape(format!("conv layer {} does not match the config", i + 1)));
            }
            cin = c.out_channels();
        }
        if hidden.inputs() != config.flatten_len()
            || hidden.outputs() != config.dense_units
            || output.inputs() != config.dense_units
            || output.outputs() != NUM_CLASSES
        {
            return Err(Error::Shape("dense layers do not match the config".into()));
        }
        Ok(Self { config: config.clone(), convs, hidden, output })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn convs(&self) -> &[ConvLayer<T>] {
        &self.convs
    }

    pub fn hidden(&self) -> &DenseLayer<T> {
        &self.hidden
    }

    pub fn output(&self) -> &DenseLayer<T> {
        &self.output
    }

    /// Sets the learning rate recorded in the config (used when persisting).
    pub fn set_learning_rate(&mut self, lr: f64) {
        self.config.learning_rate = lr;
    }

    /// Parameter buffers in layer order: each conv (kernel, bias), hidden
    /// (weights, bias), output (weights, bias).
    pub fn params(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::with_capacity(2 * CONV_BLOCKS + 4);
        for c in &self.convs {
            out.push(c.kernel());
            out.push(c.bias());
        }
        out.extend([self.hidden.weights(), self.hidden.bias(), self.output.weights(), self.output.bias()]);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::with_capacity(2 * CONV_BLOCKS + 4);
        for c in &mut self.convs {
            out.extend(c.params_mut());
        }
        out.extend(self.hidden.params_mut());
        out.extend(self.output.params_mut());
        out
    }

    /// Number of stored weight elements.
    pub fn stored_param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            convs: self.convs.iter().map(ConvLayer::cast).collect(),
            hidden: self.hidden.cast(),
            output: self.output.cast(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        let (_, h, w, c) = input.nhwc()?;
        let s = self.config.input_size;
        if h != s || w != s || c != INPUT_CHANNELS {
            return Err(Error::Shape(format!("network expects N×{s}×{s}×{INPUT_CHANNELS}, got {:?}", input.shape())));
        }
        Ok(())
    }

    /// Inference-mode logits (dropout disabled).
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(input)?;
        let mut x = input.clone();
        for conv in &self.convs {
            let mut a = conv.forward(&x)?;
            relu_in_place(&mut a);
            x = maxpool2_forward(&a)?.0;
        }
        let n = x.batch();
        let flat = x.reshape(vec![n, self.config.flatten_len()])?;
        let mut hidden = self.hidden.forward(&flat)?;
        relu_in_place(&mut hidden);
        self.output.forward(&hidden)
    }

    /// Class probabilities in inference mode.
    pub fn predict(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        softmax(&self.forward(input)?)
    }

    /// Training-mode logits plus everything the backward pass needs.
    pub fn forward_train(&self, input: &Tensor<T>, rng: &mut dyn RngCore) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(input)?;
        let mut blocks = Vec::with_capacity(CONV_BLOCKS);
        let mut x = input.clone();
        for conv in &self.convs {
            let mut a = conv.forward(&x)?;
            relu_in_place(&mut a);
            let (pooled, pool) = maxpool2_forward(&a)?;
            blocks.push(BlockCache { input: x, activation: a, pool });
            x = pooled;
        }
        let n = x.batch();
        let flat = x.reshape(vec![n, self.config.flatten_len()])?;
        let mut hidden = self.hidden.forward(&flat)?;
        relu_in_place(&mut hidden);
        let (dropped, mask) = dropout_forward(&hidden, self.config.dropout_rate, true, rng)?;
        let logits = self.output.forward(&dropped)?;
        Ok((logits, ForwardCache { blocks, flat, hidden, mask, dropped }))
    }

    /// Gradients of the loss given `d loss / d logits`.
    pub fn backward(&self, cache: &ForwardCache<T>, grad_logits: &Tensor<T>) -> Result<Gradients<T>> {
        if grad_logits.shape() != [cache.dropped.batch(), NUM_CLASSES] {
            return Err(Error::Shape(format!("grad_logits {:?} does not match the cached batch", grad_logits.shape())));
        }
        let mut slots: Vec<Vec<T>> = vec![Vec::new(); 2 * CONV_BLOCKS + 4];

        let out_g = self.output.backward(&cache.dropped, grad_logits)?;
        slots[2 * CONV_BLOCKS + 2] = out_g.weights;
        slots[2 * CONV_BLOCKS + 3] = out_g.bias;
        let g = dropout_backward(&out_g.input, &cache.mask)?;
        let g = relu_backward(&cache.hidden, &g)?;
        let hid_g = self.hidden.backward(&cache.flat, &g)?;
        slots[2 * CONV_BLOCKS] = hid_g.weights;
        slots[2 * CONV_BLOCKS + 1] = hid_g.bias;

        let last = &cache.blocks[CONV_BLOCKS - 1];
        let (n, h, w, c) = last.activation.nhwc()?;
        let mut g = hid_g.input.reshape(vec![n, pooled_dim(h), pooled_dim(w), c])?;
        for (i, (conv, block)) in self.convs.iter().zip(&cache.blocks).enumerate().rev() {
            let ga = maxpool2_backward(&g, &block.pool)?;
            let gz = relu_backward(&block.activation, &ga)?;
            let grads = conv.backward_impl(&block.input, &gz, i > 0)?;
            slots[2 * i] = grads.kernel;
            slots[2 * i + 1] = grads.bias;
            if let Some(gi) = grads.input {
                g = gi;
            }
        }
        Ok(Gradients { slots })
    }

    /// Post-ReLU (pre-pool) activations of the first `blocks` conv layers.
    pub fn conv_activations(&self, input: &Tensor<T>, blocks: usize) -> Result<Vec<Tensor<T>>> {
        self.check_input(input)?;
        let mut out = Vec::with_capacity(blocks);
        let mut x = input.clone();
        for conv in self.convs.iter().take(blocks) {
            let mut a = conv.forward(&x)?;
            relu_in_place(&mut a);
            x = maxpool2_forward(&a)?.0;
            out.push(a);
        }
        Ok(out)
    }
}
