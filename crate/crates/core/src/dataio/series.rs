use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One timestamped observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    /// Milliseconds since the Unix epoch.
    pub timestamp: i64,
    pub features: Vec<f64>,
    /// `true` when the tick belongs to an anomaly.
    pub label: bool,
}

/// An ordered, fixed-dimension sequence of ticks.
///
/// Construction through [`TickSeries::new`] enforces strictly increasing
/// timestamps, a shared feature dimension and finite feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    feature_names: Vec<String>,
    records: Vec<TickRecord>,
}

impl TickSeries {
    pub fn new(feature_names: Vec<String>, records: Vec<TickRecord>) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::Schema("series needs at least one feature".into()));
        }
        for (i, rec) in records.iter().enumerate() {
            if rec.features.len() != d {
                return Err(Error::shape(
                    "tick_series",
                    format!("{d} features"),
                    format!("{} features at record {i}", rec.features.len()),
                ));
            }
            if let Some(j) = rec.features.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain {
                    op: "tick_series",
                    detail: format!("non-finite feature {} at record {i}", feature_names[j]),
                });
            }
            if i > 0 && rec.timestamp <= records[i - 1].timestamp {
                return Err(Error::Ordering {
                    row: i + 1,
                    timestamp: rec.timestamp,
                    previous: records[i - 1].timestamp,
                });
            }
        }
        Ok(Self {
            feature_names,
            records,
        })
    }

    pub fn empty(feature_names: Vec<String>) -> Self {
        Self {
            feature_names,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn records(&self) -> &[TickRecord] {
        &self.records
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.records.iter().map(|r| r.label)
    }

    pub fn positive_count(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    /// Contiguous sub-series `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> TickSeries {
        TickSeries {
            feature_names: self.feature_names.clone(),
            records: self.records[start..end].to_vec(),
        }
    }

    /// Feature rows `[start, end)` as a `(end − start) × d` matrix.
    pub fn feature_block(&self, start: usize, end: usize) -> Matrix {
        let d = self.dim();
        let mut values = Vec::with_capacity((end - start) * d);
        for rec in &self.records[start..end] {
            values.extend_from_slice(&rec.features);
        }
        Matrix::from_vec(end - start, d, values).expect("records share dimension d")
    }

    /// Applies `f` to every feature vector, keeping timestamps and labels.
    pub(crate) fn map_features(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> TickSeries {
        TickSeries {
            feature_names: self.feature_names.clone(),
            records: self
                .records
                .iter()
                .map(|r| TickRecord {
                    timestamp: r.timestamp,
                    features: f(&r.features),
                    label: r.label,
                })
                .collect(),
        }
    }
}
