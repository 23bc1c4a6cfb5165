//! Tick-series ingestion, synthetic order-book generation and
//! chronological splitting.

mod csv_io;
mod series;
mod split;
pub mod synth;

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_with_names};
pub use series::{TickRecord, TickSeries};
pub use split::{split_chronological, split_sizes, Splits, MIN_SPLIT_LENGTH};
pub use synth::{generate_synthetic, Archetype, ArchetypeMix, Episode, SynthConfig, SyntheticData};
