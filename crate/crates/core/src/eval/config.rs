//! Top-level run configuration: `{windows, model, train, synth}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::SynthConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::pipeline::WindowSpec;
use crate::training::TrainConfig;

/// Every section and field is optional; missing ones take their defaults.
/// `model.d` and `model.stages` are always derived from the data and the
/// window lengths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub windows: WindowSpec,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Model configuration with the input width and stage count filled in.
    pub fn resolved_model(&self, dim: usize) -> ModelConfig {
        ModelConfig {
            d: dim,
            stages: self.windows.stages(),
            ..self.model.clone()
        }
    }
}
