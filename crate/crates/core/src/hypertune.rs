//! Hyperparameter search with the puffin optimizer.
//!
//! A point `u` of the unit cube decodes to a learning rate, a head count and a
//! model width. Its fitness is `1 - validation accuracy` after a short
//! training run on a fixed carve of the training split.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::puffin::{optimize, Bounds, OptResult, SwarmConfig};
use crate::rng;
use crate::tinyformer::{forward, predict_class, ModelConfig, ModelInput, ParamSet};
use crate::trainer::{initial_params, train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub lr_log10: (f64, f64),
    pub n_heads: Vec<usize>,
    pub d_model: (usize, usize),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            lr_log10: (-4.5, -2.5),
            n_heads: vec![1, 2, 4, 8],
            d_model: (16, 128),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.lr_log10;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Argument(format!("bad lr_log10 range [{lo}, {hi}]")));
        }
        if self.n_heads.is_empty() || self.n_heads.contains(&0) {
            return Err(Error::Argument("n_heads needs positive entries".into()));
        }
        let (lo, hi) = self.d_model;
        if lo == 0 || lo > hi {
            return Err(Error::Argument(format!("bad d_model range [{lo}, {hi}]")));
        }
        for &h in &self.n_heads {
            let step = width_step(h);
            if lo.div_ceil(step) * step > hi {
                return Err(Error::Argument(format!(
                    "no d_model in [{lo}, {hi}] is a multiple of {step}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub lr: f64,
    pub n_heads: usize,
    pub d_model: usize,
}

impl Hyperparams {
    /// `base` with these three values and `d_ff = 4 * d_model`.
    pub fn model_config(&self, base: &ModelConfig) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            d_ff: 4 * self.d_model,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialBudget {
    pub trial_epochs: usize,
    pub val_fraction: f64,
    /// Cap on the training examples each trial sees.
    pub subsample: Option<usize>,
}

impl Default for TrialBudget {
    fn default() -> Self {
        TrialBudget {
            trial_epochs: 15,
            val_fraction: 0.2,
            subsample: None,
        }
    }
}

impl TrialBudget {
    pub fn validate(&self) -> Result<()> {
        if self.trial_epochs < 1 {
            return Err(Error::Argument("trial_epochs must be at least 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "val_fraction must be in (0, 1), got {}",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub hyperparams: Hyperparams,
    /// In `[0, 1]`, or `+inf` when the trial failed.
    pub fitness: f64,
    pub seconds: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Widths must split evenly over the heads and stay even for the sinusoidal
/// position features.
fn width_step(n_heads: usize) -> usize {
    n_heads * 2 / gcd(n_heads, 2)
}

/// Nearest multiple of `lcm(n_heads, 2)` to `raw` inside `range`, ties down.
pub fn repair_d_model(raw: f64, n_heads: usize, range: (usize, usize)) -> usize {
    let step = width_step(n_heads) as f64;
    let lowest = (range.0 as f64 / step).ceil() * step;
    let highest = (range.1 as f64 / step).floor() * step;
    let down = ((raw / step).floor() * step).clamp(lowest, highest);
    let up = ((raw / step).ceil() * step).clamp(lowest, highest);
    let pick = if up - raw < raw - down { up } else { down };
    pick as usize
}

fn lerp(range: (f64, f64), t: f64) -> f64 {
    range.0 + t * (range.1 - range.0)
}

/// Maps a cube point to hyperparameters. Coordinates are clamped to `[0, 1]`.
pub fn decode(u: &[f64], space: &SearchSpace) -> Hyperparams {
    let c = |i: usize| u.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    let lr = 10f64.powf(lerp(space.lr_log10, c(0)));
    let slot = ((c(1) * space.n_heads.len() as f64).floor() as usize).min(space.n_heads.len() - 1);
    let n_heads = space.n_heads[slot];
    let raw = lerp((space.d_model.0 as f64, space.d_model.1 as f64), c(2));
    Hyperparams {
        lr,
        n_heads,
        d_model: repair_d_model(raw, n_heads, space.d_model),
    }
}

/// Shared inputs of every trial: the fixed train/validation carve plus the
/// model and training settings that are not searched.
#[derive(Clone, Debug)]
pub struct TuneData {
    pub train_inputs: Vec<ModelInput>,
    pub train_labels: Vec<usize>,
    pub val_inputs: Vec<ModelInput>,
    pub val_labels: Vec<usize>,
    pub base_model: ModelConfig,
    pub base_train: TrainConfig,
}

impl TuneData {
    /// Shuffles with `(seed, "hypertune.carve", 0)` and holds out the last
    /// `val_fraction` as validation. `subsample` then caps the trial
    /// training part.
    pub fn carve(
        inputs: &[ModelInput],
        labels: &[usize],
        budget: &TrialBudget,
        base_model: ModelConfig,
        base_train: TrainConfig,
    ) -> Result<Self> {
        budget.validate()?;
        if inputs.len() != labels.len() {
            return Err(Error::Argument(format!("{} inputs but {} labels", inputs.len(), labels.len())));
        }
        if inputs.len() < 2 {
            return Err(Error::Argument("tuning needs at least two training examples".into()));
        }
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.shuffle(&mut rng::stream(base_train.seed, "hypertune.carve", 0));
        let n_val = ((inputs.len() as f64 * budget.val_fraction).round() as usize).clamp(1, inputs.len() - 1);
        let (fit, val) = order.split_at(inputs.len() - n_val);
        let fit = &fit[..budget.subsample.unwrap_or(fit.len()).min(fit.len())];
        let val_labels: Vec<usize> = val.iter().map(|&i| labels[i]).collect();
        if !(val_labels.contains(&0) && val_labels.contains(&1)) {
            return Err(Error::Validation("validation carve lacks one of the classes".into()));
        }
        if fit.is_empty() {
            return Err(Error::Argument("subsample leaves no training examples".into()));
        }
        Ok(TuneData {
            train_inputs: fit.iter().map(|&i| inputs[i].clone()).collect(),
            train_labels: fit.iter().map(|&i| labels[i]).collect(),
            val_inputs: val.iter().map(|&i| inputs[i].clone()).collect(),
            val_labels,
            base_model,
            base_train,
        })
    }
}

/// `1 - validation accuracy` after `trial_epochs` of training under the
/// decoded hyperparameters.
pub fn trial_fitness(h: &Hyperparams, budget: &TrialBudget, data: &TuneData) -> Result<f64> {
    let model = h.model_config(&data.base_model);
    let config = TrainConfig {
        max_epochs: budget.trial_epochs,
        lr0: h.lr,
        ..data.base_train.clone()
    };
    let params = initial_params(&model, config.seed)?;
    let (params, _) = train(&config, &model, params, &data.train_inputs, &data.train_labels)?;
    validation_error(&model, &params, data)
}

/// `1 - accuracy` of `params` on the validation carve.
pub fn validation_error(model: &ModelConfig, params: &ParamSet, data: &TuneData) -> Result<f64> {
    let mut correct = 0;
    for (input, &label) in data.val_inputs.iter().zip(&data.val_labels) {
        let (logits, _) = forward(model, params, input)?;
        correct += usize::from(predict_class(logits) == label);
    }
    Ok(1.0 - correct as f64 / data.val_inputs.len() as f64)
}

/// Fitness of a cube point; failed trials score `+inf`.
pub fn fitness(u: &[f64], space: &SearchSpace, budget: &TrialBudget, data: &TuneData) -> f64 {
    trial_fitness(&decode(u, space), budget, data).unwrap_or(f64::INFINITY)
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub best: Hyperparams,
    pub best_fitness: f64,
    /// Every trial in evaluation order.
    pub trials: Vec<TrialRecord>,
    pub optimizer: OptResult,
}

pub fn tune(space: &SearchSpace, budget: &TrialBudget, swarm: &SwarmConfig, data: &TuneData) -> Result<TuneResult> {
    space.validate()?;
    budget.validate()?;
    let objective = |u: &[f64]| fitness(u, space, budget, data);
    let result = match optimize(objective, &Bounds::unit_cube(3), swarm) {
        Err(Error::Numeric(msg)) if msg.contains("never finite") => {
            return Err(Error::Numeric("no successful trial".into()));
        }
        other => other?,
    };
    let trials = result
        .evaluations
        .iter()
        .enumerate()
        .map(|(trial, e)| TrialRecord {
            trial,
            hyperparams: decode(&e.position, space),
            fitness: if e.value.is_finite() { e.value } else { f64::INFINITY },
            seconds: e.seconds,
        })
        .collect();
    Ok(TuneResult {
        best: decode(&result.best_position, space),
        best_fitness: result.best_fitness,
        trials,
        optimizer: result,
    })
}

pub fn write_trials_csv<W: Write>(trials: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["trial", "lr", "n_heads", "d_model", "fitness", "seconds"])?;
    for t in trials {
        w.write_record([
            t.trial.to_string(),
            t.hyperparams.lr.to_string(),
            t.hyperparams.n_heads.to_string(),
            t.hyperparams.d_model.to_string(),
            t.fitness.to_string(),
            t.seconds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("tuning_trials.csv", e))?;
    Ok(())
}

pub const BEST_CONFIG_FORMAT: &str = "best-config";

/// The tuned settings as read back by training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestConfig {
    pub format: String,
    pub lr: f64,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub fitness: f64,
    #[serde(default)]
    pub echo: serde_json::Value,
}

impl BestConfig {
    pub fn new(h: &Hyperparams, fitness: f64, echo: serde_json::Value) -> Self {
        BestConfig {
            format: BEST_CONFIG_FORMAT.into(),
            lr: h.lr,
            n_heads: h.n_heads,
            d_model: h.d_model,
            d_ff: 4 * h.d_model,
            fitness,
            echo,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let best: BestConfig = serde_json::from_str(&text)?;
        if best.format != BEST_CONFIG_FORMAT {
            return Err(Error::Validation(format!("{}: not a best-config file", path.display())));
        }
        Ok(best)
    }
}
