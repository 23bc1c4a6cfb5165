use crate::numerics::Matrix;

/// Per-time-step Shannon entropy (nats) of the normalized feature magnitudes.
///
/// `p[t, j] = (|Z[t, j]| + ε) / Σ_j (|Z[t, j]| + ε)` and `w[t] = −Σ_j p ln p`,
/// so `0 ≤ w[t] ≤ ln d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyWeights {
    pub w: Vec<f64>,
}

pub fn entropy_weights(z: &Matrix, epsilon: f64) -> EntropyWeights {
    let w = (0..z.rows())
        .map(|t| {
            let row = z.row(t);
            let total: f64 = row.iter().map(|v| v.abs() + epsilon).sum();
            let h: f64 = row
                .iter()
                .map(|v| {
                    let p = (v.abs() + epsilon) / total;
                    if p > 0.0 {
                        -p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum();
            h.max(0.0)
        })
        .collect();
    EntropyWeights { w }
}
