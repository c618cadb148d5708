use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Axis};

use super::forward::ForwardCache;
use super::ops::layer_norm_backward;
use super::params::{ModelConfig, ParamSet, N_CLASSES};
use crate::error::{Error, Result};

/// Gradients of a scalar loss whose gradient with respect to the logits is
/// `dlogits`, for every parameter.
pub fn backward(
    config: &ModelConfig,
    params: &ParamSet,
    cache: &ForwardCache,
    dlogits: [f64; N_CLASSES],
) -> Result<ParamSet> {
    let mut grads = ParamSet::zeros(config);
    backward_into(config, params, cache, dlogits, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but adds into an existing gradient set.
pub fn backward_into(
    config: &ModelConfig,
    params: &ParamSet,
    cache: &ForwardCache,
    dlogits: [f64; N_CLASSES],
    grads: &mut ParamSet,
) -> Result<()> {
    if cache.config != *config || cache.layers.len() != config.n_layers {
        return Err(Error::Contract("forward cache was produced for a different model".into()));
    }
    if cache.pooled.len() != config.d_model
        || cache.layers.iter().any(|l| l.q.nrows() != cache.tokens.len())
    {
        return Err(Error::Contract("forward cache is inconsistent".into()));
    }
    params.check_shapes(config)?;
    grads.check_shapes(config)?;
    if !dlogits.iter().all(|g| g.is_finite()) {
        return Err(Error::Numeric("non-finite logit gradient".into()));
    }

    let dl = Array1::from(dlogits.to_vec());
    for (i, &p) in cache.pooled.iter().enumerate() {
        for (j, &g) in dl.iter().enumerate() {
            grads.classifier_w[[i, j]] += p * g;
        }
    }
    grads.classifier_b += &dl;

    let n = cache.tokens.len();
    if n == 0 {
        return Ok(());
    }
    let d = config.d_model;
    let dk = config.head_dim();
    let scale = 1.0 / (dk as f64).sqrt();

    let dpooled = params.classifier_w.dot(&dl) / n as f64;
    let mut dx = Array2::from_shape_fn((n, d), |(_, c)| dpooled[c]);

    for l in (0..config.n_layers).rev() {
        let lc = &cache.layers[l];
        let p = &params.layers[l];
        let g = &mut grads.layers[l];

        // Feed-forward block: x2 = x1 + relu(LN2(x1) W1 + b1) W2 + b2.
        general_mat_mul(1.0, &lc.act.t(), &dx, 1.0, &mut g.w2);
        g.b2 += &dx.sum_axis(Axis(0));
        let mut dz = dx.dot(&p.w2.t());
        dz.zip_mut_with(&lc.pre_act, |d, &z| {
            if z <= 0.0 {
                *d = 0.0;
            }
        });
        general_mat_mul(1.0, &lc.normed2.t(), &dz, 1.0, &mut g.w1);
        g.b1 += &dz.sum_axis(Axis(0));
        let dnormed2 = dz.dot(&p.w1.t());
        let dx1 = &dx + &layer_norm_backward(&dnormed2, &lc.ln2, &p.ln2_gain, &mut g.ln2_gain, &mut g.ln2_bias);

        // Attention block: x1 = x + concat_h(softmax(Q_h K_hᵀ/√d_k) V_h) Wo.
        general_mat_mul(1.0, &lc.context.t(), &dx1, 1.0, &mut g.wo);
        let dcontext = dx1.dot(&p.wo.t());
        let mut dq = Array2::zeros((n, d));
        let mut dk_all = Array2::zeros((n, d));
        let mut dv = Array2::zeros((n, d));
        for (h, a) in lc.attn.iter().enumerate() {
            let cols = s![.., h * dk..(h + 1) * dk];
            let dout = dcontext.slice(cols);
            let da = dout.dot(&lc.v.slice(cols).t());
            dv.slice_mut(cols).assign(&a.t().dot(&dout));
            let mut ds = a * &da;
            for (mut row, a_row) in ds.rows_mut().into_iter().zip(a.rows()) {
                let total = row.sum();
                row.zip_mut_with(&a_row, |x, &w| *x -= w * total);
            }
            ds *= scale;
            dq.slice_mut(cols).assign(&ds.dot(&lc.k.slice(cols)));
            dk_all.slice_mut(cols).assign(&ds.t().dot(&lc.q.slice(cols)));
        }
        general_mat_mul(1.0, &lc.normed1.t(), &dq, 1.0, &mut g.wq);
        general_mat_mul(1.0, &lc.normed1.t(), &dk_all, 1.0, &mut g.wk);
        general_mat_mul(1.0, &lc.normed1.t(), &dv, 1.0, &mut g.wv);
        let dnormed1 = dq.dot(&p.wq.t()) + dk_all.dot(&p.wk.t()) + dv.dot(&p.wv.t());
        dx = dx1 + layer_norm_backward(&dnormed1, &lc.ln1, &p.ln1_gain, &mut g.ln1_gain, &mut g.ln1_bias);
    }

    for (r, (&t, &w)) in cache.tokens.iter().zip(&cache.weights).enumerate() {
        grads.embedding.row_mut(t).scaled_add(w, &dx.row(r));
    }
    Ok(())
}
