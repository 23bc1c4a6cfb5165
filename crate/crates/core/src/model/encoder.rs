//! One stage of the encoder: multi-head attention, output projection,
//! optional residual + layer norm, FFN, and mean pooling over time.

use crate::error::{Error, Result};
use crate::model::attention::{attention_backward, attention_forward, HeadCache};
use crate::model::{EntropyWeights, ModelConfig, StageParams};
use crate::numerics::ops::{matmul, matmul_nt, matmul_tn};
use crate::numerics::Matrix;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Per-row normalization output and the reciprocal scale of each row.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    pub y: Matrix,
    pub inv_std: Vec<f64>,
}

/// Parameter-free layer norm over each row.
pub fn layer_norm(x: &Matrix) -> LayerNormCache {
    let d = x.cols() as f64;
    let mut y = x.clone();
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = y.row_mut(r);
        let mean = row.iter().sum::<f64>() / d;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
        let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        row.iter_mut().for_each(|v| *v = (*v - mean) * inv);
        inv_std.push(inv);
    }
    LayerNormCache { y, inv_std }
}

/// `dx = inv · (dy − mean(dy) − y · mean(dy ⊙ y))` per row.
pub fn layer_norm_backward(cache: &LayerNormCache, dy: &Matrix) -> Matrix {
    let d = dy.cols() as f64;
    let mut dx = Matrix::zeros(dy.rows(), dy.cols());
    for r in 0..dy.rows() {
        let g = dy.row(r);
        let y = cache.y.row(r);
        let mean_g = g.iter().sum::<f64>() / d;
        let mean_gy = g.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / d;
        let inv = cache.inv_std[r];
        for ((o, &gv), &yv) in dx.row_mut(r).iter_mut().zip(g).zip(y) {
            *o = inv * (gv - mean_g - yv * mean_gy);
        }
    }
    dx
}

#[derive(Debug, Clone)]
pub struct StageCache {
    heads: Vec<HeadCache>,
    concat: Matrix,
    attn_norm: Option<LayerNormCache>,
    /// Input to the FFN (post-norm attention block output).
    ffn_in: Matrix,
    pre_act: Matrix,
    hidden: Matrix,
    ffn_norm: Option<LayerNormCache>,
    rows: usize,
}

fn check_input(z: &Matrix, cfg: &ModelConfig) -> Result<()> {
    if z.cols() != cfg.d || z.rows() == 0 {
        return Err(Error::shape(
            "stage_encode",
            z.shape_str(),
            format!("Wx{}", cfg.d),
        ));
    }
    Ok(())
}

/// Runs one stage and returns the pooled `d`-vector plus the cache.
pub fn stage_forward(
    z: &Matrix,
    weights: Option<&EntropyWeights>,
    p: &StageParams,
    cfg: &ModelConfig,
) -> Result<(Vec<f64>, StageCache)> {
    check_input(z, cfg)?;
    let rows = z.rows();
    let mut heads = Vec::with_capacity(p.heads.len());
    let mut concat = Matrix::zeros(rows, p.heads.len() * cfg.d_k);
    for (i, hp) in p.heads.iter().enumerate() {
        let cache = attention_forward(z, hp, weights)?;
        concat.set_columns(i * cfg.d_k, &cache.context);
        heads.push(cache);
    }
    let projected = matmul(&concat, &p.wo)?;

    let (ffn_in, attn_norm) = if cfg.use_residual_norm {
        let ln = layer_norm(&projected.add(z)?);
        (ln.y.clone(), Some(ln))
    } else {
        (projected, None)
    };

    let pre_act = matmul(&ffn_in, &p.w1)?.add_row_broadcast(&p.b1)?;
    let hidden = pre_act.map(|v| v.max(0.0));
    let ffn_out = matmul(&hidden, &p.w2)?.add_row_broadcast(&p.b2)?;

    let (out, ffn_norm) = if cfg.use_residual_norm {
        let ln = layer_norm(&ffn_out.add(&ffn_in)?);
        (ln.y.clone(), Some(ln))
    } else {
        (ffn_out, None)
    };

    let pooled = out.column_means();
    Ok((
        pooled,
        StageCache {
            heads,
            concat,
            attn_norm,
            ffn_in,
            pre_act,
            hidden,
            ffn_norm,
            rows,
        },
    ))
}

/// Pooled stage feature only.
pub fn stage_encode(
    z: &Matrix,
    weights: Option<&EntropyWeights>,
    p: &StageParams,
    cfg: &ModelConfig,
) -> Result<Vec<f64>> {
    Ok(stage_forward(z, weights, p, cfg)?.0)
}

/// Accumulates parameter sensitivities for one stage into `grads`.
pub fn stage_backward(
    z: &Matrix,
    weights: Option<&EntropyWeights>,
    p: &StageParams,
    cfg: &ModelConfig,
    cache: &StageCache,
    d_pooled: &[f64],
    grads: &mut StageParams,
) -> Result<()> {
    let scale = 1.0 / cache.rows as f64;
    let mut d_out = Matrix::zeros(cache.rows, cfg.d);
    for r in 0..cache.rows {
        for (o, g) in d_out.row_mut(r).iter_mut().zip(d_pooled) {
            *o = g * scale;
        }
    }

    // FFN block
    let d_ffn_sum = match &cache.ffn_norm {
        Some(ln) => layer_norm_backward(ln, &d_out),
        None => d_out,
    };
    let d_ffn_out = &d_ffn_sum;
    grads.w2.add_assign(&matmul_tn(&cache.hidden, d_ffn_out)?)?;
    for (g, v) in grads.b2.iter_mut().zip(d_ffn_out.column_sums()) {
        *g += v;
    }
    let d_hidden = matmul_nt(d_ffn_out, &p.w2)?;
    let mut d_pre = d_hidden;
    for (g, &x) in d_pre.as_mut_slice().iter_mut().zip(cache.pre_act.as_slice()) {
        if x <= 0.0 {
            *g = 0.0;
        }
    }
    grads.w1.add_assign(&matmul_tn(&cache.ffn_in, &d_pre)?)?;
    for (g, v) in grads.b1.iter_mut().zip(d_pre.column_sums()) {
        *g += v;
    }
    let mut d_ffn_in = matmul_nt(&d_pre, &p.w1)?;
    if cfg.use_residual_norm {
        d_ffn_in.add_assign(&d_ffn_sum)?;
    }

    // attention block
    let d_projected = match &cache.attn_norm {
        Some(ln) => layer_norm_backward(ln, &d_ffn_in),
        None => d_ffn_in,
    };
    grads.wo.add_assign(&matmul_tn(&cache.concat, &d_projected)?)?;
    let d_concat = matmul_nt(&d_projected, &p.wo)?;
    for (i, (hc, hg)) in cache.heads.iter().zip(grads.heads.iter_mut()).enumerate() {
        let d_ctx = d_concat.columns(i * cfg.d_k, cfg.d_k);
        let g = attention_backward(z, hc, weights, &d_ctx)?;
        hg.wq.add_assign(&g.wq)?;
        hg.wk.add_assign(&g.wk)?;
        hg.wv.add_assign(&g.wv)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0, 6.0], [-4.0, 0.0, 0.5, 0.5]]);
        let ln = layer_norm(&x);
        for r in 0..2 {
            let row = ln.y.row(r);
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|v| v * v).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn zero_weights_reduce_to_normalized_input() {
        let cfg = ModelConfig {
            d: 3,
            d_k: 2,
            heads: 1,
            stages: 1,
            ffn_hidden: 4,
            ..ModelConfig::default()
        };
        let p = ModelParams::zeros(&cfg);
        let z = Matrix::from_rows(&[[1.0, -2.0, 0.5], [3.0, 0.0, -1.0]]);
        let pooled = stage_encode(&z, None, &p.stages[0], &cfg).unwrap();
        let expected = layer_norm(&z).y.column_means();
        for (a, b) in pooled.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let cfg = ModelConfig {
            d: 3,
            stages: 1,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg, 0);
        assert!(stage_encode(&Matrix::zeros(4, 2), None, &p.stages[0], &cfg).is_err());
    }
}
