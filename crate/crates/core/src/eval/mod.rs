//! Metrics, the ablation harness, plot exports and the file-level command
//! drivers.

pub mod ablation;
pub mod commands;
mod config;
mod experiment;
pub mod export;
pub mod metrics;

pub use ablation::{ablate, AblationRow, AblationTable, MeanRow, Variant};
pub use config::RunConfig;
pub use experiment::{
    evaluate, prepare, prepare_for_checkpoint, prepare_set, run_experiment, train_model, EvalSplit, MetricsReport,
    PreparedData, PreparedSet, TrainedModel,
};
pub use export::{export_depth, export_timeline, timeline, TimelineRow};
pub use metrics::{accuracy_f1, auc_roc, Confusion};
