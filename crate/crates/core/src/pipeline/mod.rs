//! Standardization, multi-scale end-aligned windowing and positional
//! encoding.

mod encoding;
mod standardize;
mod windows;

pub use encoding::{encode, positional_encoding, stage_encodings, PositionalEncoding};
pub use standardize::{fit_standardization, standardize, unstandardize, StandardizationParams};
pub use windows::{build_windows, LabelRule, WindowSample, WindowSpec, Windows};
