//! Versioned JSON checkpoint.
//!
//! One JSON object: `format`, `version`, the model and window
//! configuration, the training-set standardization, the decision threshold,
//! `param_count`, and `params`, the flat parameter vector in the order
//! documented on [`ModelParams`]. Floats are written in shortest
//! round-trip form, so save/load is exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::pipeline::{StandardizationParams, WindowSpec};

pub const CHECKPOINT_FORMAT: &str = "stagewin-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub windows: WindowSpec,
    pub standardization: StandardizationParams,
    pub threshold: f64,
    pub param_count: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(
        model: ModelConfig,
        windows: WindowSpec,
        standardization: StandardizationParams,
        threshold: f64,
        params: &ModelParams,
    ) -> Self {
        let flat = params.to_flat();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model,
            windows,
            standardization,
            threshold,
            param_count: flat.len(),
            params: flat,
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::from_flat(&self.model, &self.params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format `{}`", ckpt.format)));
        }
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        ckpt.model.validate()?;
        ckpt.windows.validate()?;
        if ckpt.params.len() != ckpt.param_count || ckpt.param_count != ckpt.model.param_count() {
            return Err(Error::Checkpoint(format!(
                "parameter count mismatch: header {}, payload {}, model expects {}",
                ckpt.param_count,
                ckpt.params.len(),
                ckpt.model.param_count()
            )));
        }
        if ckpt.standardization.dim() != ckpt.model.d || ckpt.windows.stages() != ckpt.model.stages {
            return Err(Error::Checkpoint(
                "standardization or window spec disagrees with the model shape".into(),
            ));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let cfg = ModelConfig {
            d: 3,
            d_k: 2,
            heads: 1,
            stages: 2,
            ffn_hidden: 4,
            ..ModelConfig::default()
        };
        let windows = WindowSpec {
            lengths: vec![2, 4],
            stride: 1,
            ..WindowSpec::default()
        };
        let params = ModelParams::init(&cfg, 17);
        Checkpoint::new(cfg, windows, StandardizationParams::identity(3), 0.37, &params)
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let ckpt = sample();
        let back = Checkpoint::from_json(&ckpt.to_json().unwrap()).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.model_params().unwrap().to_flat(), ckpt.params);
    }

    #[test]
    fn rejects_tampered_payload() {
        let mut ckpt = sample();
        ckpt.params.pop();
        assert!(matches!(
            Checkpoint::from_json(&ckpt.to_json().unwrap()),
            Err(Error::Checkpoint(_))
        ));
        let mut ckpt = sample();
        ckpt.version = 99;
        assert!(Checkpoint::from_json(&ckpt.to_json().unwrap()).is_err());
    }
}
