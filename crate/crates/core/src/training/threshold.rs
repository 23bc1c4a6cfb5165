use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdChoice {
    pub tau: f64,
    /// Validation F1 at `tau`.
    pub f1: f64,
    /// Set when the validation labels contain a single class; `tau` is then 0.5.
    pub degenerate: bool,
}

/// F1 of the rule `score > tau`.
pub fn f1_at(scores: &[f64], labels: &[bool], tau: f64) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s > tau, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    f1_from_counts(tp, fp, fneg)
}

pub(crate) fn f1_from_counts(tp: usize, fp: usize, fneg: usize) -> f64 {
    let denom = 2 * tp + fp + fneg;
    if tp == 0 || denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Picks the F1-maximizing threshold among the midpoints of consecutive
/// distinct scores and 0.5; ties go to the larger threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice> {
    if scores.len() != labels.len() {
        return Err(Error::Size(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let positives = labels.iter().filter(|&&y| y).count();
    if positives == 0 || positives == labels.len() {
        log::warn!("validation labels contain a single class; using threshold 0.5");
        return Ok(ThresholdChoice {
            tau: 0.5,
            f1: f1_at(scores, labels, 0.5),
            degenerate: true,
        });
    }

    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // positives among the first i sorted scores
    let mut pos_prefix = Vec::with_capacity(pairs.len() + 1);
    pos_prefix.push(0usize);
    for &(_, y) in &pairs {
        pos_prefix.push(pos_prefix.last().unwrap() + y as usize);
    }

    let mut candidates = vec![0.5];
    for w in pairs.windows(2) {
        if w[0].0 < w[1].0 {
            candidates.push(0.5 * (w[0].0 + w[1].0));
        }
    }
    candidates.sort_by(f64::total_cmp);

    let n = pairs.len();
    let mut best = ThresholdChoice {
        tau: 0.5,
        f1: -1.0,
        degenerate: false,
    };
    for tau in candidates {
        let idx = pairs.partition_point(|p| p.0 <= tau);
        let predicted = n - idx;
        let tp = positives - pos_prefix[idx];
        let f1 = f1_from_counts(tp, predicted - tp, positives - tp);
        if f1 >= best.f1 {
            best.tau = tau;
            best.f1 = f1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_separated() {
        let c = select_threshold(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(c.f1, 1.0);
        // candidates 0.15, 0.5, 0.5, 0.85; the tie between both 0.5 values is harmless
        assert_eq!(c.tau, 0.5);
    }

    #[test]
    fn single_class_warns() {
        let c = select_threshold(&[0.1, 0.7], &[false, false]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.tau, 0.5);
    }

    #[test]
    fn small_sweep_matches_enumeration() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [false, false, true, true];
        let c = select_threshold(&scores, &labels).unwrap();
        // candidates: 0.225 -> F1 0.8, 0.375 -> 0.5, 0.5 -> 2/3, 0.6 -> 2/3
        assert!((c.tau - 0.225).abs() < 1e-15);
        assert!((c.f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_larger_threshold() {
        // 0.5 and 0.65 both predict only the 0.8 window: F1 = 2/3 for each
        let c = select_threshold(&[0.2, 0.5, 0.8], &[true, false, true]).unwrap();
        assert!((c.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((c.tau - 0.65).abs() < 1e-15);
    }
}
