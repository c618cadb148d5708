//! Building blocks shared by the forward and backward passes.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Variance guard inside layer normalization.
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Sinusoidal position table: `PE(p, 2i) = sin(p / 10000^(2i/d))` and
/// `PE(p, 2i+1) = cos(p / 10000^(2i/d))`.
pub fn positional_encoding(seq_len: usize, d_model: usize) -> Result<Array2<f64>> {
    if d_model % 2 != 0 {
        return Err(Error::Argument(format!(
            "positional encoding needs an even d_model, got {d_model}"
        )));
    }
    let positions: Vec<usize> = (0..seq_len).collect();
    Ok(positional_rows(&positions, d_model))
}

/// Rows of the position table for the given positions only.
pub(crate) fn positional_rows(positions: &[usize], d_model: usize) -> Array2<f64> {
    let inv_freq: Vec<f64> = (0..d_model)
        .map(|j| 10000f64.powf(-((j / 2 * 2) as f64) / d_model as f64))
        .collect();
    Array2::from_shape_fn((positions.len(), d_model), |(r, j)| {
        let angle = positions[r] as f64 * inv_freq[j];
        if j % 2 == 0 {
            angle.sin()
        } else {
            angle.cos()
        }
    })
}

/// Numerically stable softmax of every row.
pub fn softmax_rows(scores: &mut Array2<f64>) {
    for mut row in scores.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        row.mapv_inplace(|x| (x - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|x| x / sum);
    }
}

/// Scaled dot-product attention. Returns `(weights · V, weights)` with
/// `weights = softmax(Q Kᵀ / √d_k)` row by row.
pub fn attention(
    q: ArrayView2<'_, f64>,
    k: ArrayView2<'_, f64>,
    v: ArrayView2<'_, f64>,
) -> (Array2<f64>, Array2<f64>) {
    let scale = 1.0 / (q.ncols() as f64).sqrt();
    let mut weights = q.dot(&k.t()) * scale;
    softmax_rows(&mut weights);
    (weights.dot(&v), weights)
}

/// Saved statistics of one layer-norm application.
#[derive(Clone, Debug)]
pub struct NormCache {
    pub normalized: Array2<f64>,
    pub inv_std: Array1<f64>,
}

/// Per-row layer normalization with population variance.
pub fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> (Array2<f64>, NormCache) {
    let d = x.ncols() as f64;
    let mut normalized = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, s) in normalized.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / d;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
        *s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.mapv_inplace(|v| (v - mean) * *s);
    }
    let out = &normalized * gain + bias;
    (out, NormCache { normalized, inv_std })
}

/// Backward pass of [`layer_norm`]. Accumulates the gain and bias gradients
/// and returns the gradient with respect to the input.
pub fn layer_norm_backward(
    dy: &Array2<f64>,
    cache: &NormCache,
    gain: &Array1<f64>,
    dgain: &mut Array1<f64>,
    dbias: &mut Array1<f64>,
) -> Array2<f64> {
    *dgain += &(dy * &cache.normalized).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let d = dy.ncols() as f64;
    let mut dx = dy * gain;
    for ((mut row, xhat), &s) in dx
        .rows_mut()
        .into_iter()
        .zip(cache.normalized.rows())
        .zip(cache.inv_std.iter())
    {
        let mean_g = row.sum() / d;
        let mean_gx = row.dot(&xhat) / d;
        for (g, &xh) in row.iter_mut().zip(xhat.iter()) {
            *g = s * (*g - mean_g - xh * mean_gx);
        }
    }
    dx
}
