use ndarray::Array2;

use super::{NormMode, TfidfModel, TokenSequence};
use crate::error::{Error, Result};

/// Dense document by term weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub norm_mode: NormMode,
}

impl FeatureMatrix {
    /// Raw count times idf weights, one row per document.
    pub fn from_documents(docs: &[TokenSequence], model: &TfidfModel) -> Self {
        let mut values = Array2::zeros((docs.len(), model.vocab().len()));
        for (r, doc) in docs.iter().enumerate() {
            for (c, w) in model.vectorize(doc, NormMode::None).entries {
                values[[r, c]] = w;
            }
        }
        FeatureMatrix {
            values,
            norm_mode: NormMode::None,
        }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}

/// `RowL2` scales every non-zero row to unit length. `ColumnZScore` centers
/// each column and divides by its population standard deviation; constant
/// columns become zero. `None` returns the values unchanged.
pub fn standardize(matrix: &FeatureMatrix, mode: NormMode) -> Result<FeatureMatrix> {
    if matrix.values.is_empty() {
        return Err(Error::Argument("cannot standardize an empty matrix".into()));
    }
    let mut values = matrix.values.clone();
    match mode {
        NormMode::None => {}
        NormMode::RowL2 => {
            for mut row in values.rows_mut() {
                let norm = row.dot(&row).sqrt();
                if norm > 0.0 {
                    row.mapv_inplace(|x| x / norm);
                }
            }
        }
        NormMode::ColumnZScore => {
            let n = values.nrows() as f64;
            for mut col in values.columns_mut() {
                let mean = col.sum() / n;
                let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                let std = var.sqrt();
                if std > 1e-12 * mean.abs().max(1.0) {
                    col.mapv_inplace(|x| (x - mean) / std);
                } else {
                    col.fill(0.0);
                }
            }
        }
    }
    Ok(FeatureMatrix {
        values,
        norm_mode: mode,
    })
}
