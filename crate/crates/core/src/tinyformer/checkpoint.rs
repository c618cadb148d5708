//! JSON checkpoints.
//!
//! Layout (version 1):
//!
//! ```text
//! {
//!   "format": "tinyformer-checkpoint",
//!   "version": 1,
//!   "config": { d_model, n_heads, n_layers, d_ff, seq_len, vocab_size, positional_encoding },
//!   "echo": <run configuration or null>,
//!   "tensors": [ { "name": "embedding", "shape": [rows, cols], "data": [row-major f64...] }, ... ]
//! }
//! ```
//!
//! Tensors appear in [`ParamSet::tensors`] order. Floats are written with the
//! shortest representation that round-trips exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{ModelConfig, ParamSet};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "tinyformer-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    #[serde(default)]
    echo: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// A loaded checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ParamSet,
    pub echo: serde_json::Value,
}

pub fn to_json(config: &ModelConfig, params: &ParamSet, echo: &serde_json::Value) -> Result<String> {
    params.check_shapes(config)?;
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        echo: echo.clone(),
        tensors: params
            .tensors()
            .into_iter()
            .map(|t| TensorEntry {
                name: t.name,
                shape: t.shape,
                data: t.data.to_vec(),
            })
            .collect(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn from_json(text: &str) -> Result<Checkpoint> {
    let file: CheckpointFile = serde_json::from_str(text)?;
    if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported checkpoint {} v{}",
            file.format, file.version
        )));
    }
    file.config.validate()?;
    let mut params = ParamSet::zeros(&file.config);
    let expected: Vec<(String, Vec<usize>)> = params
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.shape))
        .collect();
    if expected.len() != file.tensors.len() {
        return Err(Error::Validation(format!(
            "checkpoint has {} tensors, config implies {}",
            file.tensors.len(),
            expected.len()
        )));
    }
    for ((dst, (name, shape)), entry) in params.tensors_mut().into_iter().zip(&expected).zip(&file.tensors) {
        if entry.name != *name || entry.shape != *shape || entry.data.len() != dst.len() {
            return Err(Error::Validation(format!(
                "checkpoint tensor `{}` {:?} does not match expected `{name}` {shape:?}",
                entry.name, entry.shape
            )));
        }
        dst.copy_from_slice(&entry.data);
    }
    if !params.is_finite() {
        return Err(Error::Validation("checkpoint contains non-finite weights".into()));
    }
    Ok(Checkpoint {
        config: file.config,
        params,
        echo: file.echo,
    })
}

pub fn save(path: impl AsRef<Path>, config: &ModelConfig, params: &ParamSet, echo: &serde_json::Value) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(config, params, echo)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
