use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Input feature dimension.
    pub d: usize,
    /// Per-head attention width.
    pub d_k: usize,
    pub heads: usize,
    /// Number of window stages `K`.
    pub stages: usize,
    pub ffn_hidden: usize,
    pub use_weighted_attention: bool,
    /// Residual connection plus per-row layer normalization after the
    /// attention block and after the FFN.
    pub use_residual_norm: bool,
    /// Smoothing added to feature magnitudes before the entropy weights.
    pub entropy_epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 10,
            d_k: 8,
            heads: 2,
            stages: 3,
            ffn_hidden: 32,
            use_weighted_attention: true,
            use_residual_norm: true,
            entropy_epsilon: 1e-6,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.d_k == 0 || self.heads == 0 || self.stages == 0 || self.ffn_hidden == 0 {
            return Err(Error::Config(format!(
                "model dimensions must be positive: d={}, d_k={}, heads={}, stages={}, ffn_hidden={}",
                self.d, self.d_k, self.heads, self.stages, self.ffn_hidden
            )));
        }
        if !(self.entropy_epsilon > 0.0) {
            return Err(Error::Config("entropy_epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Width of the concatenated stage features, `K·d`.
    pub fn feature_width(&self) -> usize {
        self.stages * self.d
    }

    pub fn param_count(&self) -> usize {
        let (d, dk, h, f) = (self.d, self.d_k, self.heads, self.ffn_hidden);
        let per_stage = 3 * h * d * dk + h * dk * d + d * f + f + f * d + d;
        self.stages * per_stage + self.stages * d + 1
    }
}
