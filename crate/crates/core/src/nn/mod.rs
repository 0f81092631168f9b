//! Layers, loss, optimizer and persistence for the fixed CNN.

pub mod activation;
pub mod adamax;
pub mod conv;
pub mod dense;
pub mod dropout;
pub mod loss;
pub mod network;
pub mod persist;
pub mod pool;

pub use activation::{relu_backward, relu_forward};
pub use adamax::AdamaxState;
pub use conv::{ConvGrads, ConvLayer};
pub use dense::{DenseGrads, DenseLayer};
pub use dropout::{dropout_backward, dropout_forward};
pub use loss::{softmax, softmax_ce, SoftmaxCe};
pub use network::{param_count, ForwardCache, Gradients, Network, NetworkConfig, NUM_CLASSES};
pub use persist::{load_weights, save_weights};
pub use pool::{maxpool2_backward, maxpool2_forward, PoolCache};
