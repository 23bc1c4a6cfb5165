use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    /// `d × d_k` each.
    pub wq: Matrix,
    pub wk: Matrix,
    pub wv: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub heads: Vec<HeadParams>,
    /// `h·d_k × d` output projection.
    pub wo: Matrix,
    /// `d × ffn_hidden`.
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `ffn_hidden × d`.
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// All trainable values.
///
/// Flat ordering (used by checkpoints and the optimizer): for each stage,
/// for each head `W_Q, W_K, W_V`; then `W_O, W_1, b_1, W_2, b_2`; after all
/// stages `W_c` then `b_c`. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub stages: Vec<StageParams>,
    /// Length `K·d`.
    pub wc: Vec<f64>,
    pub bc: f64,
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let values = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Matrix::from_vec(rows, cols, values).expect("length matches shape")
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, dk, f) = (cfg.d, cfg.d_k, cfg.ffn_hidden);
        let stages = (0..cfg.stages)
            .map(|_| {
                let heads = (0..cfg.heads)
                    .map(|_| HeadParams {
                        wq: glorot(d, dk, &mut rng),
                        wk: glorot(d, dk, &mut rng),
                        wv: glorot(d, dk, &mut rng),
                    })
                    .collect();
                StageParams {
                    heads,
                    wo: glorot(cfg.heads * dk, d, &mut rng),
                    w1: glorot(d, f, &mut rng),
                    b1: vec![0.0; f],
                    w2: glorot(f, d, &mut rng),
                    b2: vec![0.0; d],
                }
            })
            .collect();
        let wc = glorot(cfg.stages * d, 1, &mut rng).into_vec();
        Self { stages, wc, bc: 0.0 }
    }

    /// Same shapes as `cfg`, every value zero.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut p = Self::init(cfg, 0);
        p.fill(0.0);
        p
    }

    pub fn zeros_like(&self) -> Self {
        let mut p = self.clone();
        p.fill(0.0);
        p
    }

    fn fill(&mut self, v: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|x| *x = v);
        }
    }

    pub(crate) fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for s in &self.stages {
            for h in &s.heads {
                out.push(h.wq.as_slice());
                out.push(h.wk.as_slice());
                out.push(h.wv.as_slice());
            }
            out.push(s.wo.as_slice());
            out.push(s.w1.as_slice());
            out.push(&s.b1);
            out.push(s.w2.as_slice());
            out.push(&s.b2);
        }
        out.push(&self.wc);
        out.push(std::slice::from_ref(&self.bc));
        out
    }

    pub(crate) fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for s in &mut self.stages {
            for h in &mut s.heads {
                out.push(h.wq.as_mut_slice());
                out.push(h.wk.as_mut_slice());
                out.push(h.wv.as_mut_slice());
            }
            out.push(s.wo.as_mut_slice());
            out.push(s.w1.as_mut_slice());
            out.push(&mut s.b1);
            out.push(s.w2.as_mut_slice());
            out.push(&mut s.b2);
        }
        out.push(&mut self.wc);
        out.push(std::slice::from_mut(&mut self.bc));
        out
    }

    pub fn len(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for b in self.blocks() {
            out.extend_from_slice(b);
        }
        out
    }

    /// Overwrites every value from `flat`, which must have exactly [`len`](Self::len) entries.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::shape(
                "set_flat",
                format!("{} parameters", self.len()),
                format!("{} values", flat.len()),
            ));
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[offset..offset + block.len()]);
            offset += block.len();
        }
        Ok(())
    }

    pub fn from_flat(cfg: &ModelConfig, flat: &[f64]) -> Result<Self> {
        let mut p = Self::zeros(cfg);
        p.set_flat(flat)?;
        Ok(p)
    }

    /// `self += k · other`.
    pub fn add_scaled(&mut self, other: &ModelParams, k: f64) {
        for (dst, src) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += k * b;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|x| *x *= k);
        }
    }

    /// `‖θ‖₂²`.
    pub fn sum_squares(&self) -> f64 {
        self.blocks()
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            d: 3,
            d_k: 2,
            heads: 2,
            stages: 2,
            ffn_hidden: 4,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn parameter_count() {
        let c = cfg();
        // per stage: 2 heads * 3 * (3*2) + wo 4*3 + w1 3*4 + b1 4 + w2 4*3 + b2 3 = 36+12+12+4+12+3
        let per_stage = 36 + 12 + 12 + 4 + 12 + 3;
        assert_eq!(ModelParams::init(&c, 1).len(), 2 * per_stage + 6 + 1);
        assert_eq!(c.param_count(), 2 * per_stage + 7);
    }

    #[test]
    fn flat_roundtrip_and_order() {
        let c = cfg();
        let p = ModelParams::init(&c, 9);
        let flat = p.to_flat();
        assert_eq!(ModelParams::from_flat(&c, &flat).unwrap(), p);
        assert_eq!(flat[0], p.stages[0].heads[0].wq.as_slice()[0]);
        assert_eq!(*flat.last().unwrap(), p.bc);
        assert!(ModelParams::from_flat(&c, &flat[1..]).is_err());
    }

    #[test]
    fn init_bounds_and_zero_biases() {
        let c = cfg();
        let p = ModelParams::init(&c, 3);
        let limit = (6.0f64 / 5.0).sqrt();
        assert!(p.stages[0].heads[0].wq.as_slice().iter().all(|v| v.abs() <= limit));
        assert!(p.stages.iter().all(|s| s.b1.iter().chain(&s.b2).all(|&b| b == 0.0)));
        assert_eq!(p.bc, 0.0);
        assert_ne!(ModelParams::init(&c, 3), ModelParams::init(&c, 4));
    }

    #[test]
    fn add_scaled_and_norm() {
        let c = cfg();
        let p = ModelParams::init(&c, 5);
        let mut q = p.zeros_like();
        q.add_scaled(&p, 2.0);
        assert!((q.sum_squares() - 4.0 * p.sum_squares()).abs() < 1e-12);
    }
}
