//! File-level drivers behind each command-line subcommand.

use std::path::Path;

use crate::dataio::{generate_synthetic, load_csv, write_csv, Episode};
use crate::error::{Error, Result};
use crate::eval::ablation::{ablate, seed_range, AblationTable};
use crate::eval::experiment::{evaluate, prepare_for_checkpoint, train_model, EvalSplit, MetricsReport, TrainedModel};
use crate::eval::export::{export_depth, export_timeline, TimelineRow};
use crate::eval::RunConfig;
use crate::model::Checkpoint;
use crate::training::write_history_csv;

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Generates a synthetic series from `cfg.synth` and writes it as CSV.
pub fn synth_to_file(cfg: &RunConfig, out: impl AsRef<Path>) -> Result<Vec<Episode>> {
    let data = generate_synthetic(&cfg.synth)?;
    write_csv(&data.series, out)?;
    Ok(data.episodes)
}

/// Trains on `data` and saves the checkpoint (and optionally the epoch history).
pub fn train_to_file(
    data: impl AsRef<Path>,
    cfg: &RunConfig,
    out: impl AsRef<Path>,
    history: Option<&Path>,
) -> Result<TrainedModel> {
    let series = load_csv(data)?;
    let trained = train_model(&series, cfg)?;
    trained.checkpoint().save(out)?;
    if let Some(path) = history {
        write_history_csv(&trained.fit.history, path)?;
    }
    Ok(trained)
}

/// Evaluates a checkpoint and writes the metrics as pretty JSON.
pub fn eval_to_file(
    data: impl AsRef<Path>,
    model: impl AsRef<Path>,
    report: impl AsRef<Path>,
    split: EvalSplit,
) -> Result<MetricsReport> {
    let series = load_csv(data)?;
    let ckpt = Checkpoint::load(model)?;
    let set = prepare_for_checkpoint(&series, &ckpt, split)?;
    if set.is_empty() {
        return Err(Error::Size("no windows to evaluate".into()));
    }
    let (metrics, _) = evaluate(&set, &ckpt.model_params()?, &ckpt.model, ckpt.threshold)?;
    write_text(report.as_ref(), &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    Ok(metrics)
}

/// Scores every window of the split and writes the timeline CSV.
pub fn detect_to_file(
    data: impl AsRef<Path>,
    model: impl AsRef<Path>,
    timeline: impl AsRef<Path>,
    split: EvalSplit,
) -> Result<Vec<TimelineRow>> {
    let series = load_csv(data)?;
    let ckpt = Checkpoint::load(model)?;
    let set = prepare_for_checkpoint(&series, &ckpt, split)?;
    export_timeline(&set, &ckpt.model_params()?, &ckpt.model, ckpt.threshold, timeline)
}

/// Runs the ablation for `seeds` consecutive training seeds starting at
/// `cfg.train.seed` and writes the table as CSV.
pub fn ablate_to_file(
    data: impl AsRef<Path>,
    cfg: &RunConfig,
    seeds: usize,
    report: impl AsRef<Path>,
) -> Result<AblationTable> {
    if seeds == 0 {
        return Err(Error::Config("seeds must be at least 1".into()));
    }
    let series = load_csv(data)?;
    let table = ablate(&series, cfg, &seed_range(cfg.train.seed, seeds));
    table.save_csv(report)?;
    Ok(table)
}

pub fn depth_to_file(data: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<()> {
    export_depth(&load_csv(data)?, out)
}
