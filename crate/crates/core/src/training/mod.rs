//! Adam-based fitting with reduce-on-plateau learning rate, early stopping,
//! and validation-set threshold selection.

mod adam;
mod fit;
mod threshold;

pub use adam::{adam_step, AdamState, ADAM_EPS, BETA1, BETA2};
pub use fit::{evaluate_loss, fit, score_samples, write_history_csv, EpochRecord, FitOutcome, TrainConfig};
pub use threshold::{f1_at, select_threshold, ThresholdChoice};
