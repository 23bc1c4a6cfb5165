//! Staged sliding-window transformer for anomaly detection on
//! market-microstructure tick series.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: dense matrices with analytic pullbacks and a gradient checker
//! - [`dataio`]: tick series, CSV ingest, a synthetic order-book generator, splits
//! - [`pipeline`]: standardization, multi-scale windows, positional encoding
//! - [`model`]: attention, stage encoder, classifier, loss, checkpoints
//! - [`training`]: Adam, the fit loop, and threshold selection
//! - [`eval`]: metrics, the ablation harness, exports and command drivers

pub mod dataio;
mod error;
pub mod eval;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod training;

pub use error::{Error, Result};
