//! Scaled dot-product attention with optional entropy weighting of key
//! positions.

use crate::error::{Error, Result};
use crate::model::{EntropyWeights, HeadParams};
use crate::numerics::ops::{matmul, matmul_nt, matmul_tn, softmax_rows, softmax_rows_backward};
use crate::numerics::Matrix;

/// Forward intermediates for one head, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Row-stochastic attention matrix (`W × W`).
    pub probs: Matrix,
    pub context: Matrix,
}

#[derive(Debug, Clone)]
pub struct HeadGrads {
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
}

/// Scales column `j` of `scores` by `w[j]`, i.e. `scores · diag(w)`.
fn scale_columns(scores: &mut Matrix, w: &[f64]) {
    for r in 0..scores.rows() {
        for (s, &wj) in scores.row_mut(r).iter_mut().zip(w) {
            *s *= wj;
        }
    }
}

/// `softmax(Q Kᵀ / √d_k · diag(w)) V`, or the plain form when `weights` is `None`.
pub fn attention_forward(z: &Matrix, head: &HeadParams, weights: Option<&EntropyWeights>) -> Result<HeadCache> {
    let q = matmul(z, &head.wq)?;
    let k = matmul(z, &head.wk)?;
    let v = matmul(z, &head.wv)?;
    let dk = q.cols() as f64;
    let mut scores = matmul_nt(&q, &k)?.scale(1.0 / dk.sqrt());
    if let Some(w) = weights {
        if w.w.len() != z.rows() {
            return Err(Error::shape(
                "attention",
                format!("{} time steps", z.rows()),
                format!("{} entropy weights", w.w.len()),
            ));
        }
        scale_columns(&mut scores, &w.w);
    }
    let probs = softmax_rows(&scores);
    let context = matmul(&probs, &v)?;
    Ok(HeadCache {
        q,
        k,
        v,
        probs,
        context,
    })
}

/// Context-only convenience wrapper around [`attention_forward`].
pub fn attention(z: &Matrix, head: &HeadParams, weights: Option<&EntropyWeights>) -> Result<Matrix> {
    Ok(attention_forward(z, head, weights)?.context)
}

pub fn attention_backward(
    z: &Matrix,
    cache: &HeadCache,
    weights: Option<&EntropyWeights>,
    d_context: &Matrix,
) -> Result<HeadGrads> {
    let d_probs = matmul_nt(d_context, &cache.v)?;
    let d_v = matmul_tn(&cache.probs, d_context)?;
    let mut d_scores = softmax_rows_backward(&cache.probs, &d_probs)?;
    if let Some(w) = weights {
        scale_columns(&mut d_scores, &w.w);
    }
    let inv = 1.0 / (cache.q.cols() as f64).sqrt();
    let d_q = matmul(&d_scores, &cache.k)?.scale(inv);
    let d_k = matmul_tn(&d_scores, &cache.q)?.scale(inv);
    Ok(HeadGrads {
        wq: matmul_tn(z, &d_q)?,
        wk: matmul_tn(z, &d_k)?,
        wv: matmul_tn(z, &d_v)?,
    })
}
