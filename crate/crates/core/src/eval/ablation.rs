//! Four-way component ablation over several training seeds.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataio::TickSeries;
use crate::error::{Error, Result};
use crate::eval::experiment::{evaluate, prepare, train_prepared};
use crate::eval::{MetricsReport, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    /// One stage at the shortest length.
    NoStagedWindows,
    /// Stride equal to the shortest length, so windows do not overlap.
    NoSlidingWindows,
    /// Plain scaled dot-product attention.
    NoWeightedAttention,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoStagedWindows,
        Variant::NoSlidingWindows,
        Variant::NoWeightedAttention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoStagedWindows => "no_staged_windows",
            Variant::NoSlidingWindows => "no_sliding_windows",
            Variant::NoWeightedAttention => "no_weighted_attention",
        }
    }

    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            Variant::Full => {}
            Variant::NoStagedWindows => cfg.windows.lengths = vec![base.windows.shortest()],
            Variant::NoSlidingWindows => cfg.windows.stride = base.windows.shortest(),
            Variant::NoWeightedAttention => cfg.model.use_weighted_attention = false,
        }
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub seed: u64,
    /// Test metrics, or the error message of a failed run.
    pub outcome: std::result::Result<MetricsReport, String>,
}

/// Seed-averaged metrics over the successful runs of one variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanRow {
    pub variant: Variant,
    pub accuracy: f64,
    pub f1: f64,
    pub auc_roc: f64,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct AblationTable {
    pub seeds: Vec<u64>,
    /// Seed-major: all four variants for `seeds[0]`, then `seeds[1]`, ...
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    /// The four rows of one seed.
    pub fn for_seed(&self, seed: u64) -> Vec<&AblationRow> {
        self.rows.iter().filter(|r| r.seed == seed).collect()
    }

    pub fn mean(&self, variant: Variant) -> Option<MeanRow> {
        let ok: Vec<&MetricsReport> = self
            .rows
            .iter()
            .filter(|r| r.variant == variant)
            .filter_map(|r| r.outcome.as_ref().ok())
            .collect();
        if ok.is_empty() {
            return None;
        }
        let n = ok.len() as f64;
        let avg = |f: fn(&MetricsReport) -> f64| ok.iter().map(|m| f(m)).sum::<f64>() / n;
        Some(MeanRow {
            variant,
            accuracy: avg(|m| m.accuracy),
            f1: avg(|m| m.f1),
            auc_roc: avg(|m| m.auc_roc),
            runs: ok.len(),
        })
    }

    /// `variant,seed,accuracy,f1,auc_roc,tp,fp,tn,fn,threshold,error`, one
    /// row per run followed by one `mean` row per variant.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,seed,accuracy,f1,auc_roc,tp,fp,tn,fn,threshold,error\n");
        for r in &self.rows {
            let name = r.variant.name();
            match &r.outcome {
                Ok(m) => {
                    let c = &m.confusion;
                    let _ = writeln!(
                        out,
                        "{name},{},{},{},{},{},{},{},{},{},",
                        r.seed, m.accuracy, m.f1, m.auc_roc, c.tp, c.fp, c.tn, c.fneg, m.threshold
                    );
                }
                Err(e) => {
                    let _ = writeln!(out, "{name},{},,,,,,,,,{}", r.seed, csv_field(e));
                }
            }
        }
        for v in Variant::ALL {
            match self.mean(v) {
                Some(m) => {
                    let _ = writeln!(out, "{},mean,{},{},{},,,,,,", v.name(), m.accuracy, m.f1, m.auc_roc);
                }
                None => {
                    let _ = writeln!(out, "{},mean,,,,,,,,,no successful runs", v.name());
                }
            }
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

/// Trains and tests every variant for each seed on identical splits.
/// Windows are prepared once per variant; failures are recorded per row.
pub fn ablate(series: &TickSeries, base: &RunConfig, seeds: &[u64]) -> AblationTable {
    let prepared: Vec<_> = Variant::ALL
        .iter()
        .map(|&v| {
            let cfg = v.apply(base);
            let data = prepare(series, &cfg).map_err(|e| e.to_string());
            (cfg, data)
        })
        .collect();
    let mut rows = Vec::with_capacity(seeds.len() * Variant::ALL.len());
    for &seed in seeds {
        for (&variant, (cfg, data)) in Variant::ALL.iter().zip(&prepared) {
            let outcome = data.as_ref().map_err(Clone::clone).and_then(|data| {
                let mut cfg = cfg.clone();
                cfg.train.seed = seed;
                let fit = train_prepared(data, &cfg).map_err(|e| e.to_string())?;
                evaluate(&data.test, &fit.params, &data.model, fit.threshold.tau)
                    .map(|(m, _)| m)
                    .map_err(|e| e.to_string())
            });
            if let Err(e) = &outcome {
                log::warn!("ablation {} seed {seed} failed: {e}", variant.name());
            }
            rows.push(AblationRow { variant, seed, outcome });
        }
    }
    AblationTable {
        seeds: seeds.to_vec(),
        rows,
    }
}

/// `count` consecutive seeds starting at `base`.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variants_edit_one_knob() {
        let base = RunConfig::default();
        assert_eq!(Variant::Full.apply(&base), base);
        assert_eq!(Variant::NoStagedWindows.apply(&base).windows.lengths, vec![10]);
        assert_eq!(Variant::NoSlidingWindows.apply(&base).windows.stride, 10);
        assert!(!Variant::NoWeightedAttention.apply(&base).model.use_weighted_attention);
    }

    #[test]
    fn csv_escaping() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
