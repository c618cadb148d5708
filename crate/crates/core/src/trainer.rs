//! Mini-batch training: softmax cross-entropy, global-norm clipping, Adam and
//! a step learning-rate schedule.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tinyformer::{backward_into, forward, predict_class, ModelConfig, ModelInput, ParamSet, N_CLASSES};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Examples per gradient-reduction chunk. Chunks are summed in order, so the
/// result does not depend on how many threads run them.
const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub lr_drop_factor: f64,
    pub lr_drop_period: usize,
    pub clip_threshold: f64,
    pub seed: u64,
    /// Stop after this many epochs without a lower training loss.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 200,
            batch_size: 256,
            lr0: 0.0002,
            lr_drop_factor: 0.1,
            lr_drop_period: 100,
            clip_threshold: 10.0,
            seed: 42,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be at least 1".into()));
        }
        if !(self.lr0 > 0.0 && self.lr0.is_finite()) {
            return Err(Error::Argument(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.lr_drop_factor > 0.0 && self.lr_drop_factor <= 1.0) {
            return Err(Error::Argument(format!(
                "lr_drop_factor must be in (0, 1], got {}",
                self.lr_drop_factor
            )));
        }
        if self.lr_drop_period == 0 {
            return Err(Error::Argument("lr_drop_period must be at least 1".into()));
        }
        if !(self.clip_threshold > 0.0) {
            return Err(Error::Argument("clip_threshold must be positive".into()));
        }
        Ok(())
    }
}

/// Returns `-ln softmax(logits)[label]` and its gradient `softmax - one_hot`.
pub fn cross_entropy(logits: [f64; N_CLASSES], label: usize) -> Result<(f64, [f64; N_CLASSES])> {
    if label >= N_CLASSES {
        return Err(Error::Argument(format!("label {label} is not a class index")));
    }
    if !logits.iter().all(|x| x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite logits {logits:?}")));
    }
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    let loss = m + z.ln() - logits[label];
    let mut grad = [e[0] / z, e[1] / z];
    grad[label] -= 1.0;
    Ok((loss.max(0.0), grad))
}

/// Rescales `grads` so their global L2 norm is at most `threshold`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut ParamSet, threshold: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > threshold {
        grads.scale(threshold / norm);
    }
    norm
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: ParamSet,
    pub v: ParamSet,
    pub t: u64,
}

impl AdamState {
    pub fn new(config: &ModelConfig) -> Self {
        AdamState {
            m: ParamSet::zeros(config),
            v: ParamSet::zeros(config),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState, lr: f64) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::Argument(format!("learning rate must be positive, got {lr}")));
    }
    if params.shapes() != grads.shapes() || params.shapes() != state.m.shapes() {
        return Err(Error::Argument("adam shapes disagree".into()));
    }
    if !grads.is_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - ADAM_BETA1.powi(t);
    let c2 = 1.0 - ADAM_BETA2.powi(t);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut().into_iter().zip(state.v.tensors_mut()));
    for ((theta, g), (m, v)) in tensors {
        for i in 0..theta.len() {
            let gi = g.data[i];
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
            theta[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}

/// `lr0 * factor^floor(epoch / period)`.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    let drops = (epoch / config.lr_drop_period.max(1)) as i32;
    config.lr0 * config.lr_drop_factor.powi(drops)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "epoch,loss,accuracy,lr")?;
        for e in &self.epochs {
            writeln!(out, "{},{},{},{}", e.epoch, e.loss, e.accuracy, e.lr)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }
}

struct BatchStats {
    grads: ParamSet,
    loss: f64,
    correct: usize,
}

fn batch_gradients(
    model: &ModelConfig,
    params: &ParamSet,
    inputs: &[ModelInput],
    labels: &[usize],
    batch: &[usize],
) -> Result<BatchStats> {
    let chunks: Vec<Result<BatchStats>> = batch
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut stats = BatchStats {
                grads: ParamSet::zeros(model),
                loss: 0.0,
                correct: 0,
            };
            for &i in chunk {
                let (logits, cache) = forward(model, params, &inputs[i])?;
                let (loss, dlogits) = cross_entropy(logits, labels[i])?;
                backward_into(model, params, &cache, dlogits, &mut stats.grads)?;
                stats.loss += loss;
                stats.correct += usize::from(predict_class(logits) == labels[i]);
            }
            Ok(stats)
        })
        .collect();
    let mut chunks = chunks.into_iter();
    let mut total = chunks.next().expect("non-empty batch")?;
    for c in chunks {
        let c = c?;
        total.grads.add_assign(&c.grads);
        total.loss += c.loss;
        total.correct += c.correct;
    }
    Ok(total)
}

/// Fresh parameters for `model` from the stream `(seed, "tinyformer.init", 0)`.
pub fn initial_params(model: &ModelConfig, seed: u64) -> Result<ParamSet> {
    ParamSet::init(model, &mut rng::stream(seed, "tinyformer.init", 0))
}

/// Trains for `config.max_epochs` epochs of shuffled mini-batches. Each batch
/// runs forward, loss, backward, mean-gradient, clip, then Adam at the
/// scheduled rate. The last partial batch is kept. Epoch `e` shuffles with the
/// stream `(seed, "trainer.shuffle", e)`.
pub fn train(
    config: &TrainConfig,
    model: &ModelConfig,
    mut params: ParamSet,
    inputs: &[ModelInput],
    labels: &[usize],
) -> Result<(ParamSet, TrainLog)> {
    config.validate()?;
    model.validate()?;
    params.check_shapes(model)?;
    if inputs.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::Argument("training needs at least one example".into()));
    }
    let mut state = AdamState::new(model);
    let mut log = TrainLog::default();
    let mut best_loss = f64::INFINITY;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..inputs.len()).collect();

    for epoch in 0..config.max_epochs {
        let lr = lr_schedule(epoch, config);
        order.sort_unstable();
        order.shuffle(&mut rng::stream(config.seed, "trainer.shuffle", epoch as u64));
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let context = |e: Error| match e {
                Error::Numeric(msg) => Error::Numeric(format!("epoch {epoch} batch {b}: {msg}")),
                other => other,
            };
            let mut stats = batch_gradients(model, &params, inputs, labels, batch).map_err(context)?;
            stats.grads.scale(1.0 / batch.len() as f64);
            clip_gradients(&mut stats.grads, config.clip_threshold);
            adam_step(&mut params, &stats.grads, &mut state, lr).map_err(context)?;
            loss_sum += stats.loss;
            correct += stats.correct;
        }
        let n = inputs.len() as f64;
        let record = EpochRecord {
            epoch,
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
            lr,
        };
        if let Some(patience) = config.patience {
            if record.loss < best_loss {
                best_loss = record.loss;
                stale = 0;
            } else {
                stale += 1;
            }
            log.epochs.push(record);
            if stale >= patience {
                break;
            }
        } else {
            log.epochs.push(record);
        }
    }
    Ok((params, log))
}
