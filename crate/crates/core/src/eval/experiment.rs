//! Split → standardize → window → encode → train → evaluate.

use serde::{Deserialize, Serialize};

use crate::dataio::{split_chronological, TickSeries};
use crate::error::{Error, Result};
use crate::eval::metrics::{accuracy_f1, auc_roc, Confusion};
use crate::eval::RunConfig;
use crate::model::{Checkpoint, ModelConfig, ModelParams, PreparedSample};
use crate::pipeline::{
    build_windows, encode, fit_standardization, stage_encodings, standardize, StandardizationParams, WindowSpec,
};
use crate::training::{fit, score_samples, FitOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub auc_roc: f64,
    pub confusion: Confusion,
    pub threshold: f64,
    pub samples: usize,
}

/// Encoded windows of one split, with their anchor timestamps.
#[derive(Debug, Clone, Default)]
pub struct PreparedSet {
    pub samples: Vec<PreparedSample>,
    pub timestamps: Vec<i64>,
}

impl PreparedSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

/// Standardizes `raw` with `params`, cuts windows and adds positional encodings.
pub fn prepare_set(
    raw: &TickSeries,
    params: &StandardizationParams,
    spec: &WindowSpec,
    model: &ModelConfig,
) -> Result<PreparedSet> {
    let series = standardize(raw, params)?;
    let windows = build_windows(&series, spec)?;
    let tables = stage_encodings(&spec.lengths, series.dim());
    let mut set = PreparedSet::default();
    for sample in &windows.samples {
        let stages = encode(sample, &tables)?;
        set.samples.push(PreparedSample::new(stages, sample.label, model));
        set.timestamps.push(sample.timestamp);
    }
    Ok(set)
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub model: ModelConfig,
    pub windows: WindowSpec,
    pub standardization: StandardizationParams,
    pub train: PreparedSet,
    pub val: PreparedSet,
    pub test: PreparedSet,
}

/// Chronological split with standardization fit on the training part only.
pub fn prepare(series: &TickSeries, cfg: &RunConfig) -> Result<PreparedData> {
    cfg.windows.validate()?;
    let model = cfg.resolved_model(series.dim());
    model.validate()?;
    let splits = split_chronological(series)?;
    let standardization = fit_standardization(&splits.train)?;
    let set = |s: &TickSeries| prepare_set(s, &standardization, &cfg.windows, &model);
    let (train, val, test) = (set(&splits.train)?, set(&splits.val)?, set(&splits.test)?);
    Ok(PreparedData {
        model,
        windows: cfg.windows.clone(),
        standardization,
        train,
        val,
        test,
    })
}

/// Scores every window and summarizes them at threshold `tau` (`s > τ` flags).
pub fn evaluate(set: &PreparedSet, params: &ModelParams, model: &ModelConfig, tau: f64) -> Result<(MetricsReport, Vec<f64>)> {
    let scores = score_samples(&set.samples, params, model)?;
    let labels = set.labels();
    let predictions: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
    let (accuracy, f1, confusion) = accuracy_f1(&predictions, &labels)?;
    let auc = auc_roc(&scores, &labels)?;
    let report = MetricsReport {
        accuracy,
        f1,
        auc_roc: auc,
        confusion,
        threshold: tau,
        samples: labels.len(),
    };
    Ok((report, scores))
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub data: PreparedData,
    pub fit: FitOutcome,
}

impl TrainedModel {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.data.model.clone(),
            self.data.windows.clone(),
            self.data.standardization.clone(),
            self.fit.threshold.tau,
            &self.fit.params,
        )
    }

    pub fn evaluate_test(&self) -> Result<MetricsReport> {
        Ok(evaluate(&self.data.test, &self.fit.params, &self.data.model, self.fit.threshold.tau)?.0)
    }
}

pub fn train_model(series: &TickSeries, cfg: &RunConfig) -> Result<TrainedModel> {
    let data = prepare(series, cfg)?;
    let outcome = train_prepared(&data, cfg)?;
    Ok(TrainedModel { data, fit: outcome })
}

pub(crate) fn train_prepared(data: &PreparedData, cfg: &RunConfig) -> Result<FitOutcome> {
    if data.train.is_empty() || data.val.is_empty() {
        return Err(Error::Size(format!(
            "no windows in train or validation split (longest window {} ticks)",
            data.windows.longest()
        )));
    }
    if data.val.samples.iter().all(|s| !s.label) {
        log::warn!("validation split has no positive windows; threshold falls back to 0.5");
    }
    fit(&data.train.samples, &data.val.samples, &data.model, &cfg.train)
}

/// Trains on the train split and reports test metrics.
pub fn run_experiment(series: &TickSeries, cfg: &RunConfig) -> Result<(TrainedModel, MetricsReport)> {
    let trained = train_model(series, cfg)?;
    let report = trained.evaluate_test()?;
    Ok((trained, report))
}

/// Which part of a dataset a checkpoint is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalSplit {
    Train,
    Val,
    #[default]
    Test,
    All,
}

impl std::str::FromStr for EvalSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "val" => Ok(Self::Val),
            "test" => Ok(Self::Test),
            "all" => Ok(Self::All),
            other => Err(Error::Config(format!(
                "unknown split {other:?} (expected train, val, test or all)"
            ))),
        }
    }
}

/// Windows of the selected split, prepared with the checkpoint's own
/// standardization and window layout.
pub fn prepare_for_checkpoint(series: &TickSeries, ckpt: &Checkpoint, split: EvalSplit) -> Result<PreparedSet> {
    if series.dim() != ckpt.model.d {
        return Err(Error::shape(
            "checkpoint input",
            format!("{} data features", series.dim()),
            format!("{} model features", ckpt.model.d),
        ));
    }
    let part = match split {
        EvalSplit::All => series.clone(),
        _ => {
            let s = split_chronological(series)?;
            match split {
                EvalSplit::Train => s.train,
                EvalSplit::Val => s.val,
                _ => s.test,
            }
        }
    };
    prepare_set(&part, &ckpt.standardization, &ckpt.windows, &ckpt.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_names() {
        assert_eq!("test".parse::<EvalSplit>().unwrap(), EvalSplit::Test);
        assert_eq!("all".parse::<EvalSplit>().unwrap(), EvalSplit::All);
        assert!("holdout".parse::<EvalSplit>().is_err());
    }
}
