use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TokenSequence;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    #[default]
    RowL2,
    ColumnZScore,
    None,
}

/// Term to index map plus document frequencies over `n_docs` documents.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    term_to_index: HashMap<String, usize>,
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index(&self, term: &str) -> Option<usize> {
        self.term_to_index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    fn from_sorted(terms: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Validation("empty vocabulary".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("vocabulary terms must be unique and sorted".into()));
        }
        if let Some(i) = doc_freq.iter().position(|&df| df == 0 || df > n_docs) {
            return Err(Error::Validation(format!(
                "term `{}` has document frequency {} outside 1..={n_docs}",
                terms[i], doc_freq[i]
            )));
        }
        let term_to_index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary {
            term_to_index,
            terms,
            doc_freq,
            n_docs,
        })
    }
}

/// Keeps terms with `doc_freq >= min_df`, caps the vocabulary at
/// `max_features` by descending document frequency (ties go to the
/// lexicographically smaller term) and assigns indices in lexicographic order.
pub fn fit_vocabulary(docs: &[TokenSequence], min_df: usize, max_features: usize) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::Validation("cannot fit a vocabulary on zero documents".into()));
    }
    if min_df == 0 || max_features == 0 {
        return Err(Error::Argument("min_df and max_features must be at least 1".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let unique: HashSet<&str> = doc.iter().collect();
        for term in unique {
            *df.entry(term).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = df.into_iter().filter(|&(_, n)| n >= min_df).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    kept.truncate(max_features);
    kept.sort_by(|a, b| a.0.cmp(b.0));
    let (terms, freqs) = kept.into_iter().map(|(t, n)| (t.to_string(), n)).unzip();
    Vocabulary::from_sorted(terms, freqs, docs.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TfidfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
}

/// Smoothed inverse document frequency `ln((1 + n) / (1 + df)) + 1`.
pub fn smoothed_idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

pub fn fit_tfidf(vocab: Vocabulary) -> TfidfModel {
    let idf = (0..vocab.len())
        .map(|i| smoothed_idf(vocab.n_docs(), vocab.doc_freq(i)))
        .collect();
    TfidfModel { vocab, idf }
}

/// Sparse weights sorted by vocabulary index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TfidfModel {
    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    /// Raw in-document count times idf for every in-vocabulary token.
    /// `RowL2` rescales a non-zero result to unit length; other modes leave
    /// the row untouched (column scaling needs the whole matrix).
    pub fn vectorize(&self, doc: &TokenSequence, norm: NormMode) -> SparseVector {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for token in doc.iter() {
            if let Some(i) = self.vocab.index(token) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut v = SparseVector {
            entries: counts
                .into_iter()
                .map(|(i, c)| (i, c as f64 * self.idf[i]))
                .collect(),
        };
        if norm == NormMode::RowL2 {
            let n = v.norm();
            if n > 0.0 {
                v.entries.iter_mut().for_each(|e| e.1 /= n);
            }
        }
        v
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TfidfFile {
            format: TFIDF_FORMAT.into(),
            version: TFIDF_VERSION,
            n_docs: self.vocab.n_docs,
            terms: (0..self.vocab.len())
                .map(|i| TermEntry {
                    term: self.vocab.terms[i].clone(),
                    index: i,
                    df: self.vocab.doc_freq[i],
                    idf: self.idf[i],
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TfidfFile = serde_json::from_str(text)?;
        if doc.format != TFIDF_FORMAT || doc.version != TFIDF_VERSION {
            return Err(Error::Validation(format!(
                "unsupported tfidf model {} v{}",
                doc.format, doc.version
            )));
        }
        let mut entries = doc.terms;
        entries.sort_by_key(|e| e.index);
        if entries.iter().enumerate().any(|(i, e)| e.index != i) {
            return Err(Error::Validation("tfidf term indices are not contiguous".into()));
        }
        let idf: Vec<f64> = entries.iter().map(|e| e.idf).collect();
        if idf.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation("tfidf weights must be finite and non-negative".into()));
        }
        let (terms, freqs) = entries.into_iter().map(|e| (e.term, e.df)).unzip();
        let vocab = Vocabulary::from_sorted(terms, freqs, doc.n_docs)?;
        Ok(TfidfModel { vocab, idf })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

const TFIDF_FORMAT: &str = "tfidf-model";
const TFIDF_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TfidfFile {
    format: String,
    version: u32,
    n_docs: usize,
    terms: Vec<TermEntry>,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    term: String,
    index: usize,
    df: usize,
    idf: f64,
}
