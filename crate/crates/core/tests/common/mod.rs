//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use puffin_sentiment::corpus::Label;
use puffin_sentiment::evalkit::{roc_curve, ConfusionMatrix};
use puffin_sentiment::rng;
use puffin_sentiment::tinyformer::{backward, forward, ModelConfig, ModelInput, ParamSet};
use rand::Rng;

pub fn small_config() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 32,
        seq_len: 4,
        vocab_size: 20,
        positional_encoding: true,
    }
}

// Loss recomputed here from the logits, independent of the trainer module.
pub fn loss(config: &ModelConfig, params: &ParamSet, input: &ModelInput, label: usize) -> f64 {
    let (logits, _) = forward(config, params, input).unwrap();
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label]
}

pub fn random_input(config: &ModelConfig, rng: &mut rng::Rng, pad_tail: usize) -> ModelInput {
    let mut input = ModelInput::padded(config.seq_len);
    for pos in 0..config.seq_len - pad_tail {
        input.token_ids[pos] = rng.random_range(1..config.vocab_size);
        input.tfidf_weights[pos] = rng.random_range(0.2..1.0);
    }
    input
}

/// Max over all entries of |a - n| / max(|a|, |n|, 1e-6), with central
/// differences at h = 1e-5. Returns the worst error and where it occurred.
pub fn max_relative_error(config: &ModelConfig, seed: u64) -> (f64, String) {
    let mut r = rng::stream(seed, "gradcheck", 0);
    let params = ParamSet::init(config, &mut r).unwrap();
    let input = random_input(config, &mut r, 1);
    let label = (seed % 2) as usize;

    let (logits, cache) = forward(config, &params, &input).unwrap();
    let m = logits[0].max(logits[1]);
    let z = (logits[0] - m).exp() + (logits[1] - m).exp();
    let mut dlogits = [(logits[0] - m).exp() / z, (logits[1] - m).exp() / z];
    dlogits[label] -= 1.0;
    let grads = backward(config, &params, &cache, dlogits).unwrap();

    let h = 1e-5;
    let names: Vec<String> = params.tensors().into_iter().map(|t| t.name).collect();
    let analytic: Vec<Vec<f64>> = grads.tensors().into_iter().map(|t| t.data.to_vec()).collect();
    let mut worst = (0.0, String::new());
    for (ti, name) in names.iter().enumerate() {
        for i in 0..analytic[ti].len() {
            let mut plus = params.clone();
            plus.tensors_mut()[ti][i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[ti][i] -= h;
            let numeric = (loss(config, &plus, &input, label) - loss(config, &minus, &input, label)) / (2.0 * h);
            let a = analytic[ti][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}] analytic {a:e} numeric {numeric:e}"));
            }
        }
    }
    worst
}

// Expands counts back into label pairs and recomputes kappa and F from the
// pair list alone.
pub fn brute_force_kappa_f(cm: &ConfusionMatrix) -> (f64, f64) {
    let mut pairs = Vec::new();
    pairs.extend(std::iter::repeat_n((1u8, 1u8), cm.tp as usize));
    pairs.extend(std::iter::repeat_n((1, 0), cm.fn_ as usize));
    pairs.extend(std::iter::repeat_n((0, 1), cm.fp as usize));
    pairs.extend(std::iter::repeat_n((0, 0), cm.tn as usize));
    let n = pairs.len() as f64;
    let agree = pairs.iter().filter(|(y, p)| y == p).count() as f64 / n;
    let mut chance = 0.0;
    for class in [0u8, 1] {
        let truth = pairs.iter().filter(|(y, _)| *y == class).count() as f64 / n;
        let called = pairs.iter().filter(|(_, p)| *p == class).count() as f64 / n;
        chance += truth * called;
    }
    let k = if chance == 1.0 { 0.0 } else { (agree - chance) / (1.0 - chance) };

    let tp = pairs.iter().filter(|&&(y, p)| y == 1 && p == 1).count() as f64;
    let called_pos = pairs.iter().filter(|(_, p)| *p == 1).count() as f64;
    let actual_pos = pairs.iter().filter(|(y, _)| *y == 1).count() as f64;
    let wrong = pairs.iter().filter(|(y, p)| y != p).count();
    let f = if tp == 0.0 {
        if wrong == 0 { 1.0 } else { 0.0 }
    } else {
        // Harmonic mean written through its reciprocal.
        let (precision, recall) = (tp / called_pos, tp / actual_pos);
        2.0 / (1.0 / precision + 1.0 / recall)
    };
    (k, f)
}

pub fn trapezoid_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let roc = roc_curve(scores, labels).unwrap();
    roc.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

pub fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if *li == Label::Positive && *lj == Label::Negative {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn toy_corpus() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_corpus.csv")
}
