//! The staged transformer: entropy-weighted attention per stage, FFN,
//! cross-stage concatenation and a sigmoid classifier.

pub mod attention;
mod checkpoint;
mod classifier;
mod config;
pub mod encoder;
mod entropy;
mod params;

pub use attention::{attention, attention_forward};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use classifier::{
    forward, forward_prepared, loss, objective, stage_features, LossOutput, PreparedSample,
    SCORE_CLAMP,
};
pub use config::ModelConfig;
pub use encoder::stage_encode;
pub use entropy::{entropy_weights, EntropyWeights};
pub use params::{HeadParams, ModelParams, StageParams};
