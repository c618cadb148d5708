use ndarray::Array1;
use puffin_sentiment::rng;
use puffin_sentiment::tinyformer::{forward, ModelConfig, ModelInput, ParamSet};
use rand::seq::SliceRandom;
use rand::Rng;

fn config(positional_encoding: bool) -> ModelConfig {
    ModelConfig {
        d_model: 8,
        n_heads: 2,
        n_layers: 2,
        d_ff: 16,
        seq_len: 6,
        vocab_size: 15,
        positional_encoding,
    }
}

fn random_input(c: &ModelConfig, r: &mut rng::Rng) -> ModelInput {
    let mut input = ModelInput::padded(c.seq_len);
    let used = r.random_range(1..=c.seq_len);
    for pos in 0..used {
        input.token_ids[pos] = r.random_range(1..c.vocab_size);
        input.tfidf_weights[pos] = r.random_range(0.0..1.0);
    }
    input
}

#[test]
fn logits_have_two_entries_for_any_length() {
    for seq_len in [1, 3, 17] {
        let c = ModelConfig { seq_len, ..config(true) };
        let params = ParamSet::init(&c, &mut rng::stream(0, "prop", 0)).unwrap();
        let input = random_input(&c, &mut rng::stream(0, "prop", 1));
        let (logits, _) = forward(&c, &params, &input).unwrap();
        assert_eq!(logits.len(), 2);
    }
}

#[test]
fn permuting_positions_without_encoding_keeps_logits() {
    let c = config(false);
    let mut r = rng::stream(5, "perm", 0);
    for _ in 0..20 {
        let params = ParamSet::init(&c, &mut r).unwrap();
        let input = random_input(&c, &mut r);
        let (base, _) = forward(&c, &params, &input).unwrap();

        let mut order: Vec<usize> = (0..c.seq_len).collect();
        order.shuffle(&mut r);
        let permuted = ModelInput {
            token_ids: order.iter().map(|&i| input.token_ids[i]).collect(),
            tfidf_weights: order.iter().map(|&i| input.tfidf_weights[i]).collect(),
        };
        let (moved, _) = forward(&c, &params, &permuted).unwrap();
        for k in 0..2 {
            assert!((base[k] - moved[k]).abs() <= 1e-9, "{base:?} vs {moved:?}");
        }
    }
}

#[test]
fn zero_input_propagates_to_classifier_bias() {
    let c = config(false);
    let mut params = ParamSet::init(&c, &mut rng::stream(2, "zero", 0)).unwrap();
    params.classifier_b = Array1::from(vec![0.25, -0.75]);
    let input = ModelInput {
        token_ids: vec![1, 2, 3, 4, 5, 6],
        tfidf_weights: vec![0.0; 6],
    };
    let (logits, _) = forward(&c, &params, &input).unwrap();
    assert_eq!(logits, [0.25, -0.75]);

    let (logits, _) = forward(&c, &params, &ModelInput::padded(6)).unwrap();
    assert_eq!(logits, [0.25, -0.75]);
}

#[test]
fn attention_rows_are_distributions() {
    let c = config(true);
    let mut r = rng::stream(9, "softmax", 0);
    for _ in 0..50 {
        let params = ParamSet::init(&c, &mut r).unwrap();
        let (_, cache) = forward(&c, &params, &random_input(&c, &mut r)).unwrap();
        for w in cache.attention_weights() {
            for row in w.rows() {
                assert!((row.sum() - 1.0).abs() <= 1e-6);
                assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
        }
    }
}

#[test]
fn forward_is_deterministic_and_checks_shapes() {
    let c = config(true);
    let params = ParamSet::init(&c, &mut rng::stream(1, "det", 0)).unwrap();
    let input = random_input(&c, &mut rng::stream(1, "det", 1));
    let (a, _) = forward(&c, &params, &input).unwrap();
    let (b, _) = forward(&c, &params, &input).unwrap();
    assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));

    let short = ModelInput::padded(3);
    assert!(forward(&c, &params, &short).is_err());
    let mut bad = input.clone();
    bad.token_ids[0] = c.vocab_size;
    assert!(forward(&c, &params, &bad).is_err());
}

#[test]
fn huge_weights_raise_numeric_error() {
    let c = config(true);
    let mut params = ParamSet::init(&c, &mut rng::stream(1, "nan", 0)).unwrap();
    params.embedding.fill(f64::INFINITY);
    let input = random_input(&c, &mut rng::stream(1, "nan", 1));
    let err = forward(&c, &params, &input).unwrap_err();
    assert!(err.to_string().contains("non-finite"), "{err}");
}
