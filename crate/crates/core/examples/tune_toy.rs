//! A small hyperparameter search on the toy corpus.
//!
//!     cargo run --example tune_toy

use puffin_sentiment::corpus::load_corpus;
use puffin_sentiment::hypertune::{tune, SearchSpace, TrialBudget, TuneData};
use puffin_sentiment::puffin::SwarmConfig;
use puffin_sentiment::textprep::{fit_tfidf, fit_vocabulary, preprocess, Stopwords};
use puffin_sentiment::tinyformer::{ModelConfig, ModelInput};
use puffin_sentiment::trainer::TrainConfig;

fn main() -> puffin_sentiment::Result<()> {
    let docs = load_corpus(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.csv"))?;
    let stop = Stopwords::english();
    let seqs: Vec<_> = docs.iter().map(|d| preprocess(&d.text, &stop, true)).collect();
    let tfidf = fit_tfidf(fit_vocabulary(&seqs, 1, 10_000)?);
    let model = ModelConfig::new(tfidf.vocab().len() + 1);
    let inputs: Vec<_> = seqs.iter().map(|s| ModelInput::from_document(s, &tfidf, model.seq_len)).collect();
    let labels: Vec<_> = docs.iter().map(|d| d.label.index()).collect();

    let budget = TrialBudget {
        trial_epochs: 10,
        ..TrialBudget::default()
    };
    let base = TrainConfig {
        batch_size: 16,
        ..TrainConfig::default()
    };
    let data = TuneData::carve(&inputs, &labels, &budget, model, base)?;
    let swarm = SwarmConfig {
        pop_size: 4,
        max_iters: 3,
        ..SwarmConfig::default()
    };
    let result = tune(&SearchSpace::default(), &budget, &swarm, &data)?;
    for t in &result.trials {
        let h = &t.hyperparams;
        println!(
            "trial {:>2}  lr {:.2e}  heads {}  d_model {:>3}  fitness {:.4}  {:.1}s",
            t.trial, h.lr, h.n_heads, h.d_model, t.fitness, t.seconds
        );
    }
    let b = &result.best;
    println!("best: lr {:.3e}, {} heads, d_model {} (fitness {:.4})", b.lr, b.n_heads, b.d_model, result.best_fitness);
    Ok(())
}
