//! Labeled corpus ingestion and deterministic stratified splitting.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Binary sentiment label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Negative, Label::Positive];

    /// Class index used by the classifier: Negative = 0, Positive = 1.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn from_index(index: usize) -> Label {
        if index == 1 {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn parse(raw: &str) -> Option<Label> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "positive" => Some(Label::Positive),
            "negative" => Some(Label::Negative),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Positive => f.write_str("positive"),
            Label::Negative => f.write_str("negative"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: usize,
    pub text: String,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub train: Vec<LabeledDocument>,
    pub test: Vec<LabeledDocument>,
    pub ratio: f64,
    pub seed: u64,
}

/// Loads a two-column `label,text` CSV file (header required, any column order,
/// extra columns ignored).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<LabeledDocument>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file)
}

/// Same as [`load_corpus`] over any reader.
pub fn read_corpus(reader: impl std::io::Read) -> Result<Vec<LabeledDocument>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Validation(format!("header has no `{name}` column")))
    };
    let label_col = column("label")?;
    let text_col = column("text")?;

    let mut docs = Vec::new();
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let row_no = row + 1;
        let raw_label = record.get(label_col).unwrap_or_default();
        let label = Label::parse(raw_label).ok_or_else(|| {
            Error::Validation(format!("row {row_no}: unknown label `{raw_label}`"))
        })?;
        let text = record.get(text_col).unwrap_or_default().trim();
        if text.is_empty() {
            return Err(Error::Validation(format!("row {row_no}: empty text")));
        }
        docs.push(LabeledDocument {
            id: docs.len(),
            text: text.to_string(),
            label,
        });
    }
    if docs.is_empty() {
        return Err(Error::Validation("empty corpus".into()));
    }
    Ok(docs)
}

/// Per-class train quotas: `round(ratio * n)` in total, split by the
/// largest-remainder rule over `ratio * class_count`.
fn class_quotas(counts: &[usize], ratio: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let target = (ratio * total as f64).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| ratio * c as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();

    let mut order: Vec<usize> = (0..counts.len()).collect();
    // Largest remainder first; class order breaks ties.
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(assigned);
    for &class in &order {
        if missing == 0 {
            break;
        }
        if quotas[class] < counts[class] {
            quotas[class] += 1;
            missing -= 1;
        }
    }
    quotas
}

/// Deterministic stratified split. Each class is shuffled with the stream
/// `(seed, "corpus.split", class index)` and its first quota members go to
/// train. Both halves are returned in id order.
pub fn stratified_split(docs: &[LabeledDocument], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} not in (0, 1]")));
    }
    if docs.is_empty() {
        return Err(Error::Argument("cannot split an empty corpus".into()));
    }
    let by_class: Vec<Vec<&LabeledDocument>> = Label::ALL
        .iter()
        .map(|&l| docs.iter().filter(|d| d.label == l).collect())
        .collect();
    if ratio < 1.0 {
        if let Some(l) = Label::ALL.iter().zip(&by_class).find(|(_, m)| m.is_empty()) {
            return Err(Error::Validation(format!("class {} has no members", l.0)));
        }
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let quotas = class_quotas(&counts, ratio);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, (members, quota)) in by_class.into_iter().zip(quotas).enumerate() {
        let mut members = members;
        members.sort_by_key(|d| d.id);
        members.shuffle(&mut rng::stream(seed, "corpus.split", class as u64));
        let (head, tail) = members.split_at(quota);
        train.extend(head.iter().map(|d| (*d).clone()));
        test.extend(tail.iter().map(|d| (*d).clone()));
    }
    train.sort_by_key(|d| d.id);
    test.sort_by_key(|d| d.id);
    Ok(CorpusSplit {
        train,
        test,
        ratio,
        seed,
    })
}

/// Stratified subsample of at most `n` documents, ids preserved.
pub fn subsample(docs: &[LabeledDocument], n: usize, seed: u64) -> Result<Vec<LabeledDocument>> {
    if n == 0 {
        return Err(Error::Argument("subsample size must be at least 1".into()));
    }
    if n >= docs.len() {
        return Ok(docs.to_vec());
    }
    let mut picked: Vec<LabeledDocument> = Vec::with_capacity(n);
    let counts: Vec<usize> = Label::ALL
        .iter()
        .map(|&l| docs.iter().filter(|d| d.label == l).count())
        .collect();
    let quotas = class_quotas(&counts, n as f64 / docs.len() as f64);
    for (class, quota) in quotas.into_iter().enumerate() {
        let mut members: Vec<&LabeledDocument> =
            docs.iter().filter(|d| d.label.index() == class).collect();
        members.shuffle(&mut rng::stream(seed, "corpus.subsample", class as u64));
        picked.extend(members.into_iter().take(quota).cloned());
    }
    picked.sort_by_key(|d| d.id);
    Ok(picked)
}
