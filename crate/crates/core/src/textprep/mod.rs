//! Text normalization, vocabulary fitting and TF-IDF weighting.

mod matrix;
mod tfidf;
mod tokenize;

pub use matrix::{standardize, FeatureMatrix};
pub use tfidf::{fit_tfidf, fit_vocabulary, smoothed_idf, NormMode, SparseVector, TfidfModel, Vocabulary};
pub use tokenize::{preprocess, stem, tokenize, Stopwords, TokenSequence, ENGLISH_STOPWORDS_V1};
