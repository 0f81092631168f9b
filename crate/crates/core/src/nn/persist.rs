//! `LWCNN1` weight files.
//!
//! Layout: the 6 magic bytes `LWCNN1`, a little-endian `u32` length, that
//! many bytes of JSON-encoded [`NetworkConfig`], then every parameter as a
//! little-endian `f32` in [`Network::params`] order.

use std::path::Path;

use super::conv::ConvLayer;
use super::dense::DenseLayer;
use super::network::{param_count, Network, NetworkConfig, CONV_BLOCKS, INPUT_CHANNELS, NUM_CLASSES};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"LWCNN1";

pub fn to_bytes(network: &Network<f32>) -> Result<Vec<u8>> {
    let config = serde_json::to_vec(network.config())?;
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + config.len() + 4 * network.stored_param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    for buf in network.params() {
        for v in buf {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn from_bytes(bytes: &[u8]) -> Result<Network<f32>> {
    let header = MAGIC.len() + 4;
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        let n = bytes.len().min(MAGIC.len());
        return Err(Error::BadMagic {
            expected: String::from_utf8_lossy(MAGIC).into_owned(),
            found: String::from_utf8_lossy(&bytes[..n]).into_owned(),
        });
    }
    if bytes.len() < header {
        return Err(Error::Truncated { expected: header, actual: bytes.len() });
    }
    let config_len = u32::from_le_bytes(bytes[MAGIC.len()..header].try_into().unwrap()) as usize;
    if bytes.len() < header + config_len {
        return Err(Error::Truncated { expected: header + config_len, actual: bytes.len() });
    }
    let config: NetworkConfig = serde_json::from_slice(&bytes[header..header + config_len])
        .map_err(|e| Error::WeightFormat(format!("config text: {e}")))?;
    let count = param_count(&config)?;
    let expected = header + config_len + 4 * count;
    if bytes.len() < expected {
        return Err(Error::Truncated { expected, actual: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(Error::WeightFormat(format!("config implies {expected} bytes but the file has {}", bytes.len())));
    }
    let mut values = bytes[header + config_len..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    let mut take = |n: usize| -> Vec<f32> { values.by_ref().take(n).collect() };

    let mut convs = Vec::with_capacity(CONV_BLOCKS);
    let mut cin = INPUT_CHANNELS;
    for (&f, &k) in config.filters.iter().zip(&config.kernels) {
        let kernel = take(k * k * cin * f);
        let bias = take(f);
        convs.push(ConvLayer::new(k, cin, f, kernel, bias)?);
        cin = f;
    }
    let flat = config.flatten_len();
    let hidden = DenseLayer::new(flat, config.dense_units, take(flat * config.dense_units), take(config.dense_units))?;
    let output =
        DenseLayer::new(config.dense_units, NUM_CLASSES, take(config.dense_units * NUM_CLASSES), take(NUM_CLASSES))?;
    Network::from_layers(&config, convs, hidden, output)
}

pub fn save_weights(network: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_bytes(network)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Network<f32>> {
    let path = path.as_ref();
    from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
