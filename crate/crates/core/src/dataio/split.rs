use crate::dataio::TickSeries;
use crate::error::{Error, Result};

pub const MIN_SPLIT_LENGTH: usize = 20;

/// Chronological train/validation/test split.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: TickSeries,
    pub val: TickSeries,
    pub test: TickSeries,
}

/// Tick counts of the 70/15/15 split: `floor(0.70·T)`, `floor(0.15·T)`, remainder.
pub fn split_sizes(len: usize) -> (usize, usize, usize) {
    let train = len * 70 / 100;
    let val = len * 15 / 100;
    (train, val, len - train - val)
}

pub fn split_chronological(series: &TickSeries) -> Result<Splits> {
    let len = series.len();
    if len < MIN_SPLIT_LENGTH {
        return Err(Error::Size(format!(
            "series of {len} ticks is too short to split (minimum {MIN_SPLIT_LENGTH})"
        )));
    }
    let (train, val, _) = split_sizes(len);
    Ok(Splits {
        train: series.slice(0, train),
        val: series.slice(train, train + val),
        test: series.slice(train + val, len),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::TickRecord;

    fn series(n: usize) -> TickSeries {
        let records = (0..n)
            .map(|i| TickRecord {
                timestamp: i as i64 * 10,
                features: vec![i as f64],
                label: false,
            })
            .collect();
        TickSeries::new(vec!["f1".into()], records).unwrap()
    }

    #[test]
    fn hundred_ticks() {
        assert_eq!(split_sizes(100), (70, 15, 15));
    }

    #[test]
    fn flooring_rule() {
        // floor(14.7) = 14, floor(3.15) = 3, remainder 4
        assert_eq!(split_sizes(21), (14, 3, 4));
        let s = split_chronological(&series(21)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (14, 3, 4));
    }

    #[test]
    fn too_short() {
        assert!(matches!(split_chronological(&series(10)), Err(Error::Size(_))));
    }

    #[test]
    fn boundaries_are_ordered_and_cover() {
        let full = series(57);
        let s = split_chronological(&full).unwrap();
        let last = |t: &TickSeries| t.records().last().unwrap().timestamp;
        let first = |t: &TickSeries| t.records()[0].timestamp;
        assert!(last(&s.train) < first(&s.val));
        assert!(last(&s.val) < first(&s.test));
        let mut joined = s.train.records().to_vec();
        joined.extend_from_slice(s.val.records());
        joined.extend_from_slice(s.test.records());
        assert_eq!(joined, full.records());
    }
}
