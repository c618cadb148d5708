//! A small Transformer encoder classifier with an analytic backward pass.

mod backward;
pub mod checkpoint;
mod forward;
mod ops;
mod params;

pub use backward::{backward, backward_into};
pub use forward::{forward, positive_probability, predict_class, ForwardCache, ModelInput};
pub use ops::{attention, layer_norm, positional_encoding, softmax_rows, LAYER_NORM_EPS};
pub use params::{LayerParams, ModelConfig, ParamSet, TensorRef, N_CLASSES, PAD_ID};
