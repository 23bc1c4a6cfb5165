use serde::{Deserialize, Serialize};

use crate::dataio::TickSeries;
use crate::error::{Error, Result};

/// Per-feature location and scale, fitted on training ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    /// Population standard deviation; zero-variance features store 1.
    pub std: Vec<f64>,
}

impl StandardizationParams {
    pub fn identity(d: usize) -> Self {
        Self {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check_dim(&self, series: &TickSeries) -> Result<()> {
        if series.dim() != self.dim() {
            return Err(Error::shape(
                "standardize",
                format!("{} features", series.dim()),
                format!("{} parameters", self.dim()),
            ));
        }
        Ok(())
    }
}

pub fn fit_standardization(train: &TickSeries) -> Result<StandardizationParams> {
    if train.is_empty() {
        return Err(Error::Size("cannot fit standardization on an empty series".into()));
    }
    let d = train.dim();
    let n = train.len() as f64;
    let mut mean = vec![0.0; d];
    for rec in train.records() {
        for (m, v) in mean.iter_mut().zip(&rec.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // Two-pass variance keeps precision for large-offset features.
    let mut var = vec![0.0; d];
    for rec in train.records() {
        for ((s, v), m) in var.iter_mut().zip(&rec.features).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(StandardizationParams { mean, std })
}

/// `x' = (x − μ) / σ` per feature; timestamps and labels are unchanged.
pub fn standardize(series: &TickSeries, params: &StandardizationParams) -> Result<TickSeries> {
    params.check_dim(series)?;
    Ok(series.map_features(|x| {
        x.iter()
            .zip(&params.mean)
            .zip(&params.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }))
}

/// Inverse of [`standardize`]: `x = x'·σ + μ`.
pub fn unstandardize(series: &TickSeries, params: &StandardizationParams) -> Result<TickSeries> {
    params.check_dim(series)?;
    Ok(series.map_features(|x| {
        x.iter()
            .zip(&params.mean)
            .zip(&params.std)
            .map(|((v, m), s)| v * s + m)
            .collect()
    }))
}
