//! Plot-ready CSV exports: the per-window score timeline and order-book depth.

use std::io::Write;
use std::path::Path;

use crate::dataio::synth::depth_feature_names;
use crate::dataio::{write_csv_with_names, TickSeries};
use crate::error::{Error, Result};
use crate::eval::PreparedSet;
use crate::model::{ModelConfig, ModelParams};
use crate::training::score_samples;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimelineRow {
    pub timestamp: i64,
    pub probability: f64,
    pub predicted: bool,
    pub actual: bool,
}

pub fn timeline(set: &PreparedSet, params: &ModelParams, model: &ModelConfig, tau: f64) -> Result<Vec<TimelineRow>> {
    let scores = score_samples(&set.samples, params, model)?;
    Ok(scores
        .iter()
        .zip(&set.timestamps)
        .zip(&set.samples)
        .map(|((&p, &timestamp), s)| TimelineRow {
            timestamp,
            probability: p,
            predicted: p > tau,
            actual: s.label,
        })
        .collect())
}

/// Writes `timestamp,probability,predicted,actual` with 0/1 flags.
pub fn write_timeline<W: Write>(rows: &[TimelineRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "timestamp,probability,predicted,actual")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.timestamp,
            r.probability,
            u8::from(r.predicted),
            u8::from(r.actual)
        )?;
    }
    out.flush()
}

pub fn export_timeline(
    set: &PreparedSet,
    params: &ModelParams,
    model: &ModelConfig,
    tau: f64,
    path: impl AsRef<Path>,
) -> Result<Vec<TimelineRow>> {
    let path = path.as_ref();
    let rows = timeline(set, params, model, tau)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_timeline(&rows, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))?;
    Ok(rows)
}

/// Rewrites the series with depth-level headers
/// (`bid_depth_i`, `ask_depth_i`, `trade_volume`, `spread`).
pub fn export_depth(series: &TickSeries, path: impl AsRef<Path>) -> Result<()> {
    let d = series.dim();
    if d < 4 || d % 2 != 0 {
        return Err(Error::Schema(format!(
            "depth export needs 2L+2 features with L >= 1, got {d}"
        )));
    }
    write_csv_with_names(series, &depth_feature_names((d - 2) / 2), path)
}
