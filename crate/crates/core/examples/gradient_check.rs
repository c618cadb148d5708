//! Compare analytic encoder gradients with central finite differences.
//!
//!     cargo run --example gradient_check

use puffin_sentiment::rng;
use puffin_sentiment::tinyformer::{backward, forward, ModelConfig, ModelInput, ParamSet};
use puffin_sentiment::trainer::cross_entropy;

fn loss(config: &ModelConfig, params: &ParamSet, input: &ModelInput, label: usize) -> f64 {
    let (logits, _) = forward(config, params, input).unwrap();
    cross_entropy(logits, label).unwrap().0
}

fn main() -> puffin_sentiment::Result<()> {
    let config = ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 1,
        d_ff: 32,
        seq_len: 4,
        vocab_size: 20,
        positional_encoding: true,
    };
    let params = ParamSet::init(&config, &mut rng::stream(0, "example", 0))?;
    let input = ModelInput {
        token_ids: vec![3, 17, 5, 0],
        tfidf_weights: vec![0.4, 0.7, 0.55, 0.0],
    };
    let label = 1;

    let (logits, cache) = forward(&config, &params, &input)?;
    let (_, dlogits) = cross_entropy(logits, label)?;
    let grads = backward(&config, &params, &cache, dlogits)?;

    let h = 1e-5;
    let analytic = grads.tensors();
    for (ti, tensor) in params.tensors().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for i in 0..tensor.data.len() {
            let mut plus = params.clone();
            plus.tensors_mut()[ti][i] += h;
            let mut minus = params.clone();
            minus.tensors_mut()[ti][i] -= h;
            let numeric = (loss(&config, &plus, &input, label) - loss(&config, &minus, &input, label)) / (2.0 * h);
            let a = analytic[ti].data[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6));
        }
        println!("{:<16} {:>5} entries  max rel err {worst:.2e}", tensor.name, tensor.data.len());
    }
    Ok(())
}
