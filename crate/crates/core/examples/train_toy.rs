//! Train the encoder on the bundled toy corpus and report test accuracy.
//!
//!     cargo run --example train_toy

use puffin_sentiment::corpus::{load_corpus, stratified_split};
use puffin_sentiment::evalkit::{display_percent, evaluate_model};
use puffin_sentiment::textprep::{fit_tfidf, fit_vocabulary, preprocess, Stopwords};
use puffin_sentiment::tinyformer::{ModelConfig, ModelInput};
use puffin_sentiment::trainer::{initial_params, train, TrainConfig};

fn main() -> puffin_sentiment::Result<()> {
    let docs = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.csv"))?;
    let split = stratified_split(&docs, 0.7, 42)?;
    let stop = Stopwords::english();
    let prep = |d: &puffin_sentiment::corpus::LabeledDocument| preprocess(&d.text, &stop, true);
    let train_seqs: Vec<_> = split.train.iter().map(prep).collect();
    let tfidf = fit_tfidf(fit_vocabulary(&train_seqs, 1, 10_000)?);

    let model = ModelConfig::new(tfidf.vocab().len() + 1);
    let encode = |seqs: &[_]| -> Vec<ModelInput> {
        seqs.iter().map(|s| ModelInput::from_document(s, &tfidf, model.seq_len)).collect()
    };
    let train_inputs = encode(&train_seqs);
    let test_inputs = encode(&split.test.iter().map(prep).collect::<Vec<_>>());
    let train_labels: Vec<usize> = split.train.iter().map(|d| d.label.index()).collect();

    let config = TrainConfig {
        max_epochs: 30,
        batch_size: 16,
        lr0: 1e-3,
        ..TrainConfig::default()
    };
    let params = initial_params(&model, config.seed)?;
    let (params, log) = train(&config, &model, params, &train_inputs, &train_labels)?;
    for e in log.epochs.iter().step_by(5) {
        println!("epoch {:>2}  loss {:.4}  acc {:.3}", e.epoch, e.loss, e.accuracy);
    }

    let test_labels: Vec<_> = split.test.iter().map(|d| d.label).collect();
    let report = evaluate_model(&model, &params, &test_inputs, &test_labels)?;
    println!(
        "test accuracy {}%  kappa {:.3}  AUC {:.3}",
        display_percent(report.ca),
        report.kappa,
        report.auc.unwrap_or(f64::NAN)
    );
    Ok(())
}
