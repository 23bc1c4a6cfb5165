use serde::{Deserialize, Serialize};

use crate::dataio::TickSeries;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// How a multi-stage window inherits a label from its ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// Positive iff any tick in the shortest stage span is labeled.
    #[default]
    ShortestSpan,
    /// Positive iff any tick in the longest stage span is labeled.
    LongestSpan,
    /// Positive iff the anchor tick itself is labeled.
    AnchorTick,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowSpec {
    /// Stage lengths in ticks, strictly increasing.
    pub lengths: Vec<usize>,
    pub stride: usize,
    pub label_rule: LabelRule,
}

impl Default for WindowSpec {
    /// 10/30/60 ticks (seconds at one tick per second), stride 5.
    fn default() -> Self {
        Self {
            lengths: vec![10, 30, 60],
            stride: 5,
            label_rule: LabelRule::ShortestSpan,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() {
            return Err(Error::Config("window spec needs at least one stage".into()));
        }
        if self.stride == 0 || self.lengths[0] == 0 {
            return Err(Error::Config("stride and window lengths must be positive".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "window lengths must be strictly increasing, got {:?}",
                self.lengths
            )));
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.lengths.len()
    }

    pub fn shortest(&self) -> usize {
        self.lengths[0]
    }

    pub fn longest(&self) -> usize {
        *self.lengths.last().expect("validated spec has a stage")
    }

    /// `floor((T − W_K) / S) + 1`, or zero when the series is too short.
    pub fn window_count(&self, len: usize) -> usize {
        let w = self.longest();
        if len < w {
            0
        } else {
            (len - w) / self.stride + 1
        }
    }

    /// Anchor (end tick) indices in order.
    pub fn anchors(&self, len: usize) -> impl Iterator<Item = usize> + '_ {
        let first = self.longest() - 1;
        (0..self.window_count(len)).map(move |i| first + i * self.stride)
    }
}

/// One multi-stage example; all slices end at `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub anchor: usize,
    pub timestamp: i64,
    /// Slice `k` is `lengths[k] × d` covering ticks `anchor − lengths[k] + 1 ..= anchor`.
    pub slices: Vec<Matrix>,
    pub label: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Windows {
    pub samples: Vec<WindowSample>,
    /// Set when the series is shorter than the longest stage.
    pub insufficient_data: bool,
}

impl Windows {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.samples.iter().filter(|s| s.label).count()
    }
}

pub fn build_windows(series: &TickSeries, spec: &WindowSpec) -> Result<Windows> {
    spec.validate()?;
    let len = series.len();
    if len < spec.longest() {
        log::warn!(
            "series of {len} ticks is shorter than the longest window ({}); no samples built",
            spec.longest()
        );
        return Ok(Windows {
            samples: Vec::new(),
            insufficient_data: true,
        });
    }
    let labels: Vec<bool> = series.labels().collect();
    let samples = spec
        .anchors(len)
        .map(|anchor| {
            let slices = spec
                .lengths
                .iter()
                .map(|&w| series.feature_block(anchor + 1 - w, anchor + 1))
                .collect();
            let span = match spec.label_rule {
                LabelRule::ShortestSpan => spec.shortest(),
                LabelRule::LongestSpan => spec.longest(),
                LabelRule::AnchorTick => 1,
            };
            let label = labels[anchor + 1 - span..=anchor].iter().any(|&l| l);
            WindowSample {
                anchor,
                timestamp: series.records()[anchor].timestamp,
                slices,
                label,
            }
        })
        .collect();
    Ok(Windows {
        samples,
        insufficient_data: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::TickRecord;

    fn ramp(n: usize, labeled: &[usize]) -> TickSeries {
        let records = (0..n)
            .map(|i| TickRecord {
                timestamp: 1000 + i as i64,
                features: vec![i as f64, -(i as f64)],
                label: labeled.contains(&i),
            })
            .collect();
        TickSeries::new(vec!["a".into(), "b".into()], records).unwrap()
    }

    fn spec(lengths: &[usize], stride: usize) -> WindowSpec {
        WindowSpec {
            lengths: lengths.to_vec(),
            stride,
            ..WindowSpec::default()
        }
    }

    #[test]
    fn ten_ticks_window_four_stride_two() {
        let w = build_windows(&ramp(10, &[]), &spec(&[4], 2)).unwrap();
        let anchors: Vec<usize> = w.samples.iter().map(|s| s.anchor).collect();
        assert_eq!(anchors, vec![3, 5, 7, 9]);
        assert_eq!(spec(&[4], 2).window_count(10), 4);
    }

    #[test]
    fn end_aligned_stages() {
        let w = build_windows(&ramp(10, &[]), &spec(&[2, 4], 1)).unwrap();
        let first = &w.samples[0];
        assert_eq!(first.anchor, 3);
        assert_eq!(first.timestamp, 1003);
        // slice 1 covers ticks {2, 3}; slice 2 covers {0..3}
        assert_eq!(first.slices[0].get(0, 0), 2.0);
        assert_eq!(first.slices[0].get(1, 0), 3.0);
        assert_eq!(first.slices[1].shape(), (4, 2));
        assert_eq!(first.slices[1].get(0, 0), 0.0);
        assert_eq!(first.slices[1].get(3, 1), -3.0);
    }

    #[test]
    fn short_series_is_empty_not_error() {
        let w = build_windows(&ramp(3, &[]), &spec(&[4], 1)).unwrap();
        assert!(w.is_empty());
        assert!(w.insufficient_data);
    }

    #[test]
    fn label_rules() {
        // tick 1 labeled: inside the long span of anchor 3 but not the short span
        let series = ramp(6, &[1]);
        let mut s = spec(&[2, 4], 1);
        let short = build_windows(&series, &s).unwrap();
        assert!(!short.samples[0].label);
        s.label_rule = LabelRule::LongestSpan;
        let long = build_windows(&series, &s).unwrap();
        assert!(long.samples[0].label);
        s.label_rule = LabelRule::AnchorTick;
        let series = ramp(6, &[3]);
        let anchor = build_windows(&series, &s).unwrap();
        assert!(anchor.samples[0].label);
        assert!(!anchor.samples[1].label);
    }

    #[test]
    fn invalid_specs() {
        assert!(spec(&[], 1).validate().is_err());
        assert!(spec(&[4, 4], 1).validate().is_err());
        assert!(spec(&[4], 0).validate().is_err());
        assert!(spec(&[10, 30, 60], 5).validate().is_ok());
    }
}
