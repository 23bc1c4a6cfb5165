use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::pipeline::WindowSample;

/// Sinusoidal position table of shape `W × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionalEncoding {
    pub table: Matrix,
}

/// `PE[pos, 2j] = sin(pos / 10000^(2j/d))`, `PE[pos, 2j+1] = cos(pos / 10000^(2j/d))`.
pub fn positional_encoding(window: usize, d: usize) -> PositionalEncoding {
    let mut table = Matrix::zeros(window, d);
    for pos in 0..window {
        for c in 0..d {
            let j = (c / 2) as f64;
            let angle = pos as f64 / 10_000f64.powf(2.0 * j / d as f64);
            table.set(pos, c, if c % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    PositionalEncoding { table }
}

/// One table per stage length.
pub fn stage_encodings(lengths: &[usize], d: usize) -> Vec<PositionalEncoding> {
    lengths.iter().map(|&w| positional_encoding(w, d)).collect()
}

/// `Z^(k) = X^(k) + PE^(k)` for every stage.
pub fn encode(sample: &WindowSample, tables: &[PositionalEncoding]) -> Result<Vec<Matrix>> {
    if sample.slices.len() != tables.len() {
        return Err(Error::shape(
            "encode",
            format!("{} slices", sample.slices.len()),
            format!("{} tables", tables.len()),
        ));
    }
    sample
        .slices
        .iter()
        .zip(tables)
        .map(|(x, pe)| x.add(&pe.table))
        .collect()
}
