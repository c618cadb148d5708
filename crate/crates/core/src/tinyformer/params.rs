use ndarray::{Array1, Array2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Number of output classes. Fixed: the classifier is binary.
pub const N_CLASSES: usize = 2;

/// Token id reserved for padding. Vocabulary index `i` maps to id `i + 1`.
pub const PAD_ID: usize = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub seq_len: usize,
    /// Embedding rows, including the PAD row.
    pub vocab_size: usize,
    /// Adds sinusoidal position features to the input. Only tests turn it off.
    #[serde(default = "enabled")]
    pub positional_encoding: bool,
}

fn enabled() -> bool {
    true
}

impl ModelConfig {
    /// Default shape for a vocabulary of `vocab_size` embedding rows.
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            d_model: 32,
            n_heads: 2,
            n_layers: 2,
            d_ff: 128,
            seq_len: 32,
            vocab_size,
            positional_encoding: true,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("n_layers", self.n_layers),
            ("d_ff", self.d_ff),
            ("seq_len", self.seq_len),
            ("vocab_size", self.vocab_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Argument(format!("{name} must be positive")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Argument(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.positional_encoding && self.d_model % 2 != 0 {
            return Err(Error::Argument(format!(
                "positional encoding needs an even d_model, got {}",
                self.d_model
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub ln1_gain: Array1<f64>,
    pub ln1_bias: Array1<f64>,
    pub ln2_gain: Array1<f64>,
    pub ln2_bias: Array1<f64>,
}

/// All trainable weights. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub classifier_w: Array2<f64>,
    pub classifier_b: Array1<f64>,
}

/// Borrowed view of one named tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

impl LayerParams {
    fn zeros(c: &ModelConfig) -> Self {
        let (d, f) = (c.d_model, c.d_ff);
        LayerParams {
            wq: Array2::zeros((d, d)),
            wk: Array2::zeros((d, d)),
            wv: Array2::zeros((d, d)),
            wo: Array2::zeros((d, d)),
            w1: Array2::zeros((d, f)),
            b1: Array1::zeros(f),
            w2: Array2::zeros((f, d)),
            b2: Array1::zeros(d),
            ln1_gain: Array1::zeros(d),
            ln1_bias: Array1::zeros(d),
            ln2_gain: Array1::zeros(d),
            ln2_bias: Array1::zeros(d),
        }
    }

    fn init(c: &ModelConfig, rng: &mut Rng) -> Self {
        let (d, f) = (c.d_model, c.d_ff);
        LayerParams {
            wq: xavier(d, d, rng),
            wk: xavier(d, d, rng),
            wv: xavier(d, d, rng),
            wo: xavier(d, d, rng),
            w1: xavier(d, f, rng),
            b1: Array1::zeros(f),
            w2: xavier(f, d, rng),
            b2: Array1::zeros(d),
            ln1_gain: Array1::ones(d),
            ln1_bias: Array1::zeros(d),
            ln2_gain: Array1::ones(d),
            ln2_bias: Array1::zeros(d),
        }
    }
}

macro_rules! layer_fields {
    ($m:ident) => {
        $m!(wq, wk, wv, wo, w1, b1, w2, b2, ln1_gain, ln1_bias, ln2_gain, ln2_bias)
    };
}

impl ParamSet {
    /// All-zero parameters (the gradient accumulator shape).
    pub fn zeros(config: &ModelConfig) -> Self {
        ParamSet {
            embedding: Array2::zeros((config.vocab_size, config.d_model)),
            layers: (0..config.n_layers).map(|_| LayerParams::zeros(config)).collect(),
            classifier_w: Array2::zeros((config.d_model, N_CLASSES)),
            classifier_b: Array1::zeros(N_CLASSES),
        }
    }

    /// Uniform Glorot initialization for every matrix, zero biases and unit
    /// layer-norm gains. Draw order: embedding, layers in order, classifier.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let embedding = xavier(config.vocab_size, config.d_model, rng);
        let layers = (0..config.n_layers).map(|_| LayerParams::init(config, rng)).collect();
        let classifier_w = xavier(config.d_model, N_CLASSES, rng);
        Ok(ParamSet {
            embedding,
            layers,
            classifier_w,
            classifier_b: Array1::zeros(N_CLASSES),
        })
    }

    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        fn push<'a, D: ndarray::Dimension>(
            out: &mut Vec<TensorRef<'a>>,
            name: String,
            a: &'a ndarray::Array<f64, D>,
        ) {
            out.push(TensorRef {
                name,
                shape: a.shape().to_vec(),
                data: a.as_slice().expect("standard layout"),
            });
        }
        let mut out = Vec::new();
        push(&mut out, "embedding".into(), &self.embedding);
        for (i, l) in self.layers.iter().enumerate() {
            macro_rules! each {
                ($($f:ident),*) => { $( push(&mut out, format!("layers.{i}.{}", stringify!($f)), &l.$f); )* };
            }
            layer_fields!(each);
        }
        push(&mut out, "classifier.w".into(), &self.classifier_w);
        push(&mut out, "classifier.b".into(), &self.classifier_b);
        out
    }

    /// Mutable flat views in the same order as [`ParamSet::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(self.embedding.as_slice_mut().expect("standard layout"));
        for l in &mut self.layers {
            macro_rules! each {
                ($($f:ident),*) => { $( out.push(l.$f.as_slice_mut().expect("standard layout")); )* };
            }
            layer_fields!(each);
        }
        out.push(self.classifier_w.as_slice_mut().expect("standard layout"));
        out.push(self.classifier_b.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn shapes(&self) -> Vec<Vec<usize>> {
        self.tensors().into_iter().map(|t| t.shape).collect()
    }

    /// Checks every tensor shape against `config`.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let (d, f, v) = (config.d_model, config.d_ff, config.vocab_size);
        let layer_ok = |l: &LayerParams| {
            [&l.wq, &l.wk, &l.wv, &l.wo].iter().all(|w| w.dim() == (d, d))
                && l.w1.dim() == (d, f)
                && l.b1.len() == f
                && l.w2.dim() == (f, d)
                && [&l.b2, &l.ln1_gain, &l.ln1_bias, &l.ln2_gain, &l.ln2_bias].iter().all(|b| b.len() == d)
        };
        let ok = self.embedding.dim() == (v, d)
            && self.layers.len() == config.n_layers
            && self.layers.iter().all(layer_ok)
            && self.classifier_w.dim() == (d, N_CLASSES)
            && self.classifier_b.len() == N_CLASSES;
        if !ok {
            return Err(Error::Argument("parameter shapes do not match the model config".into()));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Euclidean norm over every entry of every tensor.
    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Elementwise `self += other`.
    pub fn add_assign(&mut self, other: &ParamSet) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in dst.iter_mut().zip(src.data) {
                *a += b;
            }
        }
    }
}
