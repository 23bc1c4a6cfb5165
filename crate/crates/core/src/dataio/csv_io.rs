//! CSV ingestion and export for tick series.
//!
//! Layout: UTF-8, comma separated, one header row containing `timestamp`
//! (integer milliseconds), `label` (`0`/`1`) and one column per feature.
//! Row numbers in errors count data rows from 1.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataio::{TickRecord, TickSeries};
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>) -> Result<TickSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file)
}

pub fn read_csv<R: Read>(reader: R) -> Result<TickSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();

    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let ts_col = find("timestamp")?;
    let label_col = find("label")?;
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&c| c != ts_col && c != label_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| headers[c].to_string()).collect();

    let mut records = Vec::new();
    let mut previous: Option<i64> = None;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            column: "*".into(),
            detail: e.to_string(),
        })?;
        let field = |c: usize| row.get(c).unwrap_or("");
        let parse_err = |c: usize, detail: String| Error::Parse {
            row: row_no,
            column: headers[c].to_string(),
            detail,
        };

        let timestamp: i64 = field(ts_col)
            .parse()
            .map_err(|e| parse_err(ts_col, format!("{e}")))?;
        if let Some(prev) = previous {
            if timestamp <= prev {
                return Err(Error::Ordering {
                    row: row_no,
                    timestamp,
                    previous: prev,
                });
            }
        }
        previous = Some(timestamp);

        let label = match field(label_col) {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(label_col, format!("label must be 0 or 1, got `{other}`"))),
        };

        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let v: f64 = field(c).parse().map_err(|e| parse_err(c, format!("{e}")))?;
            if !v.is_finite() {
                return Err(parse_err(c, format!("non-finite value {v}")));
            }
            features.push(v);
        }
        records.push(TickRecord {
            timestamp,
            features,
            label,
        });
    }
    TickSeries::new(feature_names, records)
}

/// Writes `series` using its own feature names as column headers.
pub fn write_csv(series: &TickSeries, path: impl AsRef<Path>) -> Result<()> {
    write_csv_with_names(series, series.feature_names(), path)
}

pub fn write_csv_with_names(
    series: &TickSeries,
    names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    to_writer(series, names, file).map_err(|e| Error::io(path, e))
}

/// Floats are written in shortest round-trip form, so reading the file
/// back reproduces every value bit for bit.
pub(crate) fn to_writer<W: Write>(series: &TickSeries, names: &[String], writer: W) -> std::io::Result<()> {
    if names.len() != series.dim() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("{} column names for {} features", names.len(), series.dim()),
        ));
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_string(), "label".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for rec in series.records() {
        row.clear();
        row.push(rec.timestamp.to_string());
        row.push(if rec.label { "1" } else { "0" }.to_string());
        row.extend(rec.features.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}
