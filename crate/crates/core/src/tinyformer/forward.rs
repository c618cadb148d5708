use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use super::ops::{attention, layer_norm, positional_rows, NormCache};
use super::params::{ModelConfig, ParamSet, N_CLASSES, PAD_ID};
use crate::error::{Error, Result};
use crate::textprep::{NormMode, TfidfModel, TokenSequence};

/// Fixed-length model input: token ids (PAD = 0) and the TF-IDF weight that
/// scales each token's embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelInput {
    pub token_ids: Vec<usize>,
    pub tfidf_weights: Vec<f64>,
}

impl ModelInput {
    /// First `seq_len` in-vocabulary tokens of `doc`, each weighted by its
    /// row-normalized TF-IDF value in that document, PAD-filled to length.
    pub fn from_document(doc: &TokenSequence, model: &TfidfModel, seq_len: usize) -> Self {
        let weights = model.vectorize(doc, NormMode::RowL2);
        let mut token_ids = Vec::with_capacity(seq_len);
        let mut tfidf_weights = Vec::with_capacity(seq_len);
        for index in doc.iter().filter_map(|t| model.vocab().index(t)).take(seq_len) {
            token_ids.push(index + 1);
            tfidf_weights.push(weights.get(index));
        }
        token_ids.resize(seq_len, PAD_ID);
        tfidf_weights.resize(seq_len, 0.0);
        ModelInput {
            token_ids,
            tfidf_weights,
        }
    }

    pub fn padded(seq_len: usize) -> Self {
        ModelInput {
            token_ids: vec![PAD_ID; seq_len],
            tfidf_weights: vec![0.0; seq_len],
        }
    }

    /// Number of non-PAD positions.
    pub fn active_len(&self) -> usize {
        self.token_ids.iter().filter(|&&t| t != PAD_ID).count()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LayerCache {
    pub ln1: NormCache,
    pub normed1: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    pub attn: Vec<Array2<f64>>,
    pub context: Array2<f64>,
    pub ln2: NormCache,
    pub normed2: Array2<f64>,
    pub pre_act: Array2<f64>,
    pub act: Array2<f64>,
}

/// Intermediate activations of one forward pass, consumed by the backward pass.
///
/// Only non-PAD positions are carried through the encoder: PAD keys are
/// masked out of attention and PAD rows are excluded from pooling, so they
/// cannot influence the logits.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub(crate) config: ModelConfig,
    pub(crate) tokens: Vec<usize>,
    pub(crate) weights: Vec<f64>,
    pub(crate) layers: Vec<LayerCache>,
    pub(crate) pooled: Array1<f64>,
    logits: [f64; N_CLASSES],
}

impl ForwardCache {
    pub fn logits(&self) -> [f64; N_CLASSES] {
        self.logits
    }

    /// Number of non-PAD positions that went through the encoder.
    pub fn active_len(&self) -> usize {
        self.tokens.len()
    }

    /// Attention weight matrices, layer-major then head.
    pub fn attention_weights(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.layers.iter().flat_map(|l| l.attn.iter())
    }
}

fn check_finite(x: &Array2<f64>, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite activation in {what}")))
    }
}

/// Encoder forward pass. Each layer is pre-norm:
/// `x += MHA(LN(x))`, then `x += FFN(LN(x))` with a ReLU feed-forward block.
/// The pooled vector is the mean over non-PAD positions; with no such
/// positions it is zero and the logits equal the classifier bias.
pub fn forward(config: &ModelConfig, params: &ParamSet, input: &ModelInput) -> Result<([f64; N_CLASSES], ForwardCache)> {
    config.validate()?;
    if input.token_ids.len() != config.seq_len || input.tfidf_weights.len() != config.seq_len {
        return Err(Error::Argument(format!(
            "input length {} / {} does not match seq_len {}",
            input.token_ids.len(),
            input.tfidf_weights.len(),
            config.seq_len
        )));
    }
    if let Some(&bad) = input.token_ids.iter().find(|&&t| t >= config.vocab_size) {
        return Err(Error::Argument(format!(
            "token id {bad} outside vocabulary of {}",
            config.vocab_size
        )));
    }
    params.check_shapes(config)?;

    let d = config.d_model;
    let dk = config.head_dim();
    let mut positions = Vec::new();
    let mut tokens = Vec::new();
    let mut weights = Vec::new();
    for (pos, (&t, &w)) in input.token_ids.iter().zip(&input.tfidf_weights).enumerate() {
        if t != PAD_ID {
            positions.push(pos);
            tokens.push(t);
            weights.push(w);
        }
    }
    let n = tokens.len();

    let mut x = Array2::zeros((n, d));
    for (r, (&t, &w)) in tokens.iter().zip(&weights).enumerate() {
        x.row_mut(r).scaled_add(w, &params.embedding.row(t));
    }
    if config.positional_encoding && n > 0 {
        x += &positional_rows(&positions, d);
    }
    check_finite(&x, "input embedding")?;

    let mut layers = Vec::with_capacity(config.n_layers);
    for (l, p) in params.layers.iter().enumerate() {
        let (normed1, ln1) = layer_norm(&x, &p.ln1_gain, &p.ln1_bias);
        let q = normed1.dot(&p.wq);
        let k = normed1.dot(&p.wk);
        let v = normed1.dot(&p.wv);
        let mut context = Array2::zeros((n, d));
        let mut attn = Vec::with_capacity(config.n_heads);
        for h in 0..config.n_heads {
            let cols = s![.., h * dk..(h + 1) * dk];
            let (out, w) = attention(q.slice(cols), k.slice(cols), v.slice(cols));
            context.slice_mut(cols).assign(&out);
            attn.push(w);
        }
        x += &context.dot(&p.wo);

        let (normed2, ln2) = layer_norm(&x, &p.ln2_gain, &p.ln2_bias);
        let pre_act = normed2.dot(&p.w1) + &p.b1;
        let act = pre_act.mapv(|z| z.max(0.0));
        x += &(act.dot(&p.w2) + &p.b2);
        check_finite(&x, &format!("layer {l}"))?;

        layers.push(LayerCache {
            ln1,
            normed1,
            q,
            k,
            v,
            attn,
            context,
            ln2,
            normed2,
            pre_act,
            act,
        });
    }

    let pooled = if n > 0 {
        x.sum_axis(ndarray::Axis(0)) / n as f64
    } else {
        Array1::zeros(d)
    };
    let out = pooled.dot(&params.classifier_w) + &params.classifier_b;
    let logits = [out[0], out[1]];
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite logits in classifier".into()));
    }
    let cache = ForwardCache {
        config: config.clone(),
        tokens,
        weights,
        layers,
        pooled,
        logits,
    };
    Ok((logits, cache))
}

/// Softmax probability of the Positive class (index 1).
pub fn positive_probability(logits: [f64; N_CLASSES]) -> f64 {
    1.0 / (1.0 + (logits[0] - logits[1]).exp())
}

/// Argmax class; ties go to class 0.
pub fn predict_class(logits: [f64; N_CLASSES]) -> usize {
    usize::from(logits[1] > logits[0])
}
