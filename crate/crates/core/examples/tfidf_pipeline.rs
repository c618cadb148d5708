//! Preprocess a few financial headlines and print their TF-IDF vectors.
//!
//!     cargo run --example tfidf_pipeline

use puffin_sentiment::corpus::load_corpus;
use puffin_sentiment::textprep::{fit_tfidf, fit_vocabulary, preprocess, NormMode, Stopwords};

fn main() -> puffin_sentiment::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/headline_sample.csv");
    let docs = load_corpus(path)?;
    let stop = Stopwords::english();
    let seqs: Vec<_> = docs.iter().map(|d| preprocess(&d.text, &stop, true)).collect();
    let model = fit_tfidf(fit_vocabulary(&seqs, 1, 10_000)?);
    println!("{} documents, {} terms", docs.len(), model.vocab().len());

    for (doc, seq) in docs.iter().zip(&seqs) {
        let v = model.vectorize(seq, NormMode::RowL2);
        let mut top: Vec<_> = v.entries.clone();
        top.sort_by(|a, b| b.1.total_cmp(&a.1));
        let shown: Vec<String> = top
            .iter()
            .take(5)
            .map(|&(i, w)| format!("{}={w:.3}", model.vocab().term(i)))
            .collect();
        println!("\n[{}] {}", doc.label, seq.join());
        println!("  norm {:.6}  top: {}", v.norm(), shown.join(" "));
    }
    Ok(())
}
