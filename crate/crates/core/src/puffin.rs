//! Arctic puffin optimization for box-constrained minimization.
//!
//! Each iteration moves every puffin toward the current leader, adds a Lévy
//! perturbation whose amplitude decays linearly over the run, occasionally
//! resamples one coordinate, clamps to the box and keeps the candidate only if
//! it is strictly better. Candidates are generated from per-puffin streams and
//! evaluated in parallel, then committed in index order.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Argument(format!(
                "bounds need matching non-empty vectors, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Argument(format!("dimension {i}: need lower < upper, got [{lo}, {hi}]")));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The same interval in every one of `dim` dimensions.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Bounds::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn unit_cube(dim: usize) -> Self {
        Bounds::uniform(dim, 0.0, 1.0).expect("unit bounds are valid")
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Puffin {
    pub position: Vec<f64>,
    /// Objective value, `+inf` until evaluated or when the objective failed.
    pub fitness: f64,
    pub evaluated: bool,
}

impl Puffin {
    fn unevaluated(position: Vec<f64>) -> Self {
        Puffin {
            position,
            fitness: f64::INFINITY,
            evaluated: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    pub pop_size: usize,
    pub max_iters: usize,
    pub mutation_prob: f64,
    /// Upper end of the per-dimension attraction coefficient.
    pub attraction_max: f64,
    pub levy_beta: f64,
    /// Perturbation amplitude at iteration 0, as a fraction of the box width.
    pub perturbation_scale: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            pop_size: 30,
            max_iters: 100,
            mutation_prob: 0.2,
            attraction_max: 1.0,
            levy_beta: 1.5,
            perturbation_scale: 0.1,
            seed: 42,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::Argument(format!("pop_size must be at least 2, got {}", self.pop_size)));
        }
        if self.max_iters < 1 {
            return Err(Error::Argument("max_iters must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::Argument(format!(
                "mutation_prob must be in [0, 1], got {}",
                self.mutation_prob
            )));
        }
        if !(self.attraction_max >= 0.0 && self.attraction_max.is_finite()) {
            return Err(Error::Argument(format!(
                "attraction_max must be non-negative, got {}",
                self.attraction_max
            )));
        }
        check_beta(self.levy_beta)?;
        if !(self.perturbation_scale >= 0.0 && self.perturbation_scale.is_finite()) {
            return Err(Error::Argument(format!(
                "perturbation_scale must be non-negative, got {}",
                self.perturbation_scale
            )));
        }
        Ok(())
    }

    /// Perturbation amplitude at `iter`.
    pub fn alpha(&self, iter: usize) -> f64 {
        self.perturbation_scale * (1.0 - iter as f64 / self.max_iters as f64)
    }
}

/// One call of the objective, in commit order.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub position: Vec<f64>,
    /// Raw objective value, possibly non-finite.
    pub value: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness after the initial sweep, then after each iteration.
    pub history: Vec<f64>,
    /// Mean finite fitness of the swarm at the same points as `history`.
    pub mean_history: Vec<f64>,
    pub evaluations: Vec<Evaluation>,
    /// Objective calls that returned a non-finite value.
    pub rejected: usize,
}

impl OptResult {
    /// Writes `iter,best_fitness,mean_fitness`, one row per history entry.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "best_fitness", "mean_fitness"])?;
        for (i, (b, m)) in self.history.iter().zip(&self.mean_history).enumerate() {
            w.write_record([i.to_string(), b.to_string(), m.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("apo_history.csv", e))?;
        Ok(())
    }

    pub fn save_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_history_csv(file)
    }
}

/// A fully evaluated population with its leader.
#[derive(Clone, Debug)]
pub struct Swarm {
    pub puffins: Vec<Puffin>,
    pub best: Puffin,
    pub evaluations: Vec<Evaluation>,
    pub rejected: usize,
}

impl Swarm {
    /// Evaluates every puffin and picks the leader (lowest index among ties).
    pub fn evaluate<F>(mut puffins: Vec<Puffin>, objective: &F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let evals = evaluate_all(puffins.iter().map(|p| p.position.clone()).collect(), objective);
        let mut swarm = Swarm {
            best: puffins[0].clone(),
            puffins: Vec::new(),
            evaluations: Vec::with_capacity(evals.len()),
            rejected: 0,
        };
        for (p, e) in puffins.iter_mut().zip(evals) {
            p.fitness = swarm.record(e);
            p.evaluated = true;
        }
        swarm.best = puffins[0].clone();
        for p in &puffins[1..] {
            if p.fitness < swarm.best.fitness {
                swarm.best = p.clone();
            }
        }
        swarm.puffins = puffins;
        swarm
    }

    fn record(&mut self, e: Evaluation) -> f64 {
        let fitness = if e.value.is_finite() {
            e.value
        } else {
            self.rejected += 1;
            f64::INFINITY
        };
        self.evaluations.push(e);
        fitness
    }

    pub fn mean_fitness(&self) -> f64 {
        let finite: Vec<f64> = self.puffins.iter().map(|p| p.fitness).filter(|f| f.is_finite()).collect();
        if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    }
}

fn evaluate_all<F>(positions: Vec<Vec<f64>>, objective: &F) -> Vec<Evaluation>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    positions
        .into_par_iter()
        .map(|position| {
            let start = Instant::now();
            let value = objective(&position);
            Evaluation {
                position,
                value,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 1.0 && beta <= 2.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("levy beta must be in (1, 2], got {beta}")))
    }
}

/// Mantegna's scale for the numerator of a Lévy(beta) step.
pub fn mantegna_sigma(beta: f64) -> f64 {
    let num = gamma(1.0 + beta) * (PI * beta / 2.0).sin();
    let den = gamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    (num / den).powf(1.0 / beta)
}

/// One heavy-tailed sample `u / |v|^(1/beta)` with `u ~ N(0, sigma^2)` and
/// `v ~ N(0, 1)`.
pub fn levy_step(rng: &mut Rng, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(levy_draw(rng, beta, mantegna_sigma(beta)))
}

fn levy_draw(rng: &mut Rng, beta: f64, sigma: f64) -> f64 {
    let u: f64 = StandardNormal.sample(rng);
    let mut v: f64 = StandardNormal.sample(rng);
    while v == 0.0 {
        v = StandardNormal.sample(rng);
    }
    sigma * u / v.abs().powf(1.0 / beta)
}

/// `pop_size` positions drawn uniformly inside `bounds`.
pub fn init_population(bounds: &Bounds, pop_size: usize, rng: &mut Rng) -> Result<Vec<Puffin>> {
    if pop_size < 2 {
        return Err(Error::Argument(format!("pop_size must be at least 2, got {pop_size}")));
    }
    Ok((0..pop_size).map(|_| Puffin::unevaluated(bounds.sample(rng))).collect())
}

fn step_stream(seed: u64, iter: usize, index: usize) -> Rng {
    rng::stream(seed, "puffin.step", ((iter as u64) << 32) | index as u64)
}

fn candidate(x: &[f64], leader: &[f64], alpha: f64, bounds: &Bounds, config: &SwarmConfig, r: &mut Rng) -> Vec<f64> {
    let sigma = mantegna_sigma(config.levy_beta);
    let mut c: Vec<f64> = (0..x.len())
        .map(|j| {
            let r1 = if config.attraction_max > 0.0 {
                r.random_range(0.0..=config.attraction_max)
            } else {
                0.0
            };
            let levy = levy_draw(r, config.levy_beta, sigma);
            let width = bounds.upper[j] - bounds.lower[j];
            x[j] + r1 * (leader[j] - x[j]) + alpha * levy * width
        })
        .collect();
    if config.mutation_prob > 0.0 && r.random_bool(config.mutation_prob) {
        let j = r.random_range(0..x.len());
        c[j] = r.random_range(bounds.lower[j]..=bounds.upper[j]);
    }
    bounds.clamp(&mut c);
    c
}

/// Advances the swarm by one iteration against the leader held at entry.
pub fn step<F>(swarm: &mut Swarm, iter: usize, bounds: &Bounds, config: &SwarmConfig, objective: &F) -> Result<()>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if iter >= config.max_iters {
        return Err(Error::Argument(format!("iter {iter} is past max_iters {}", config.max_iters)));
    }
    if swarm.puffins.iter().any(|p| !p.evaluated) {
        return Err(Error::Contract("step needs a fully evaluated swarm".into()));
    }
    let alpha = config.alpha(iter);
    let leader = swarm.best.position.clone();
    let candidates: Vec<Vec<f64>> = swarm
        .puffins
        .iter()
        .enumerate()
        .map(|(i, p)| candidate(&p.position, &leader, alpha, bounds, config, &mut step_stream(config.seed, iter, i)))
        .collect();
    let evals = evaluate_all(candidates, objective);
    for (i, e) in evals.into_iter().enumerate() {
        let position = e.position.clone();
        let fitness = swarm.record(e);
        if fitness < swarm.puffins[i].fitness {
            swarm.puffins[i].position = position;
            swarm.puffins[i].fitness = fitness;
        }
    }
    for p in &swarm.puffins {
        if p.fitness < swarm.best.fitness {
            swarm.best = p.clone();
        }
    }
    Ok(())
}

/// Minimizes `objective` over `bounds`.
pub fn optimize<F>(objective: F, bounds: &Bounds, config: &SwarmConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    optimize_seeded(objective, bounds, config, &[])
}

/// Like [`optimize`], with the first `seeds.len()` initial positions replaced
/// by `seeds` (clamped to the box).
pub fn optimize_seeded<F>(objective: F, bounds: &Bounds, config: &SwarmConfig, seeds: &[Vec<f64>]) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    if seeds.len() > config.pop_size {
        return Err(Error::Argument(format!(
            "{} seed positions for a population of {}",
            seeds.len(),
            config.pop_size
        )));
    }
    let mut puffins = init_population(bounds, config.pop_size, &mut rng::stream(config.seed, "puffin.init", 0))?;
    for (p, s) in puffins.iter_mut().zip(seeds) {
        if s.len() != bounds.dim() {
            return Err(Error::Argument(format!(
                "seed position has {} dimensions, bounds have {}",
                s.len(),
                bounds.dim()
            )));
        }
        p.position = s.clone();
        bounds.clamp(&mut p.position);
    }

    let mut swarm = Swarm::evaluate(puffins, &objective);
    let mut history = vec![swarm.best.fitness];
    let mut mean_history = vec![swarm.mean_fitness()];
    for iter in 0..config.max_iters {
        step(&mut swarm, iter, bounds, config, &objective)?;
        history.push(swarm.best.fitness);
        mean_history.push(swarm.mean_fitness());
    }
    if !swarm.best.fitness.is_finite() {
        return Err(Error::Numeric("objective never finite".into()));
    }
    Ok(OptResult {
        best_position: swarm.best.position,
        best_fitness: swarm.best.fitness,
        history,
        mean_history,
        evaluations: swarm.evaluations,
        rejected: swarm.rejected,
    })
}
