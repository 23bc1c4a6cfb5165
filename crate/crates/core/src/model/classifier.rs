//! Stage concatenation, sigmoid scoring, and the regularized weighted
//! cross-entropy objective.

use crate::error::{Error, Result};
use crate::model::encoder::{stage_backward, stage_forward};
use crate::model::{entropy_weights, EntropyWeights, ModelConfig, ModelParams};
use crate::numerics::{sigmoid, Matrix};

/// Clamp applied to scores inside the log terms.
pub const SCORE_CLAMP: f64 = 1e-12;

/// Encoded stage inputs with their entropy weights precomputed. Neither
/// depends on the parameters, so training computes them once per sample.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    pub stages: Vec<Matrix>,
    pub weights: Vec<Option<EntropyWeights>>,
    pub label: bool,
}

impl PreparedSample {
    pub fn new(stages: Vec<Matrix>, label: bool, cfg: &ModelConfig) -> Self {
        let weights = stages
            .iter()
            .map(|z| {
                cfg.use_weighted_attention
                    .then(|| entropy_weights(z, cfg.entropy_epsilon))
            })
            .collect();
        Self {
            stages,
            weights,
            label,
        }
    }
}

fn check_stages(sample: &PreparedSample, params: &ModelParams, cfg: &ModelConfig) -> Result<()> {
    if sample.stages.len() != cfg.stages || params.stages.len() != cfg.stages {
        return Err(Error::shape(
            "forward",
            format!("{} configured stages", cfg.stages),
            format!(
                "{} inputs / {} parameter stages",
                sample.stages.len(),
                params.stages.len()
            ),
        ));
    }
    Ok(())
}

/// Score clamped to stay strictly inside `(0, 1)` in floating point.
fn clamp_open_unit(s: f64) -> f64 {
    s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn logit(features: &[f64], params: &ModelParams) -> f64 {
    features.iter().zip(&params.wc).map(|(f, w)| f * w).sum::<f64>() + params.bc
}

/// Concatenated stage features `[F^(1), …, F^(K)]`.
pub fn stage_features(sample: &PreparedSample, params: &ModelParams, cfg: &ModelConfig) -> Result<Vec<f64>> {
    check_stages(sample, params, cfg)?;
    let mut features = Vec::with_capacity(cfg.feature_width());
    for ((z, w), sp) in sample.stages.iter().zip(&sample.weights).zip(&params.stages) {
        features.extend(stage_forward(z, w.as_ref(), sp, cfg)?.0);
    }
    Ok(features)
}

pub fn forward_prepared(sample: &PreparedSample, params: &ModelParams, cfg: &ModelConfig) -> Result<f64> {
    let features = stage_features(sample, params, cfg)?;
    Ok(clamp_open_unit(sigmoid(logit(&features, params))))
}

/// Anomaly score in `(0, 1)` for one window's encoded stage inputs.
pub fn forward(encoded: &[Matrix], params: &ModelParams, cfg: &ModelConfig) -> Result<f64> {
    let sample = PreparedSample::new(encoded.to_vec(), false, cfg);
    forward_prepared(&sample, params, cfg)
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    /// `∂L/∂s_i`.
    pub d_scores: Vec<f64>,
    /// Explicit `∂L/∂θ` from the regularizer, `2λθ`.
    pub d_theta: Vec<f64>,
}

/// `L = −(1/N) Σ [w₊ y log s + (1−y) log(1−s)] + λ‖θ‖²`.
///
/// Scores are clamped to `[1e−12, 1 − 1e−12]`; a clamped score contributes
/// no gradient. The regularizer is added once, outside the sample mean.
pub fn loss(scores: &[f64], labels: &[bool], lambda: f64, theta: &[f64], pos_weight: f64) -> Result<LossOutput> {
    if scores.is_empty() {
        return Err(Error::Size("loss needs at least one sample".into()));
    }
    if scores.len() != labels.len() {
        return Err(Error::Size(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n = scores.len() as f64;
    let mut total = 0.0;
    let mut d_scores = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(labels) {
        let clamped = s.clamp(SCORE_CLAMP, 1.0 - SCORE_CLAMP);
        let active = clamped == s;
        if y {
            total -= pos_weight * clamped.ln();
            d_scores.push(if active { -pos_weight / (s * n) } else { 0.0 });
        } else {
            total -= (1.0 - clamped).ln();
            d_scores.push(if active { 1.0 / ((1.0 - s) * n) } else { 0.0 });
        }
    }
    let reg: f64 = theta.iter().map(|v| v * v).sum();
    Ok(LossOutput {
        value: total / n + lambda * reg,
        d_scores,
        d_theta: theta.iter().map(|v| 2.0 * lambda * v).collect(),
    })
}

/// Full objective over a batch and its gradient w.r.t. every parameter.
pub fn objective(
    batch: &[&PreparedSample],
    params: &ModelParams,
    cfg: &ModelConfig,
    lambda: f64,
    pos_weight: f64,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Size("objective needs at least one sample".into()));
    }
    let mut grads = params.zeros_like();
    let mut scores = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for sample in batch {
        check_stages(sample, params, cfg)?;
        let mut features = Vec::with_capacity(cfg.feature_width());
        let mut stage_caches = Vec::with_capacity(cfg.stages);
        for ((z, w), sp) in sample.stages.iter().zip(&sample.weights).zip(&params.stages) {
            let (pooled, cache) = stage_forward(z, w.as_ref(), sp, cfg)?;
            features.extend(pooled);
            stage_caches.push(cache);
        }
        scores.push(sigmoid(logit(&features, params)));
        caches.push((features, stage_caches));
    }
    let labels: Vec<bool> = batch.iter().map(|s| s.label).collect();
    let out = loss(&scores, &labels, lambda, &[], pos_weight)?;
    let value = out.value + lambda * params.sum_squares();

    for ((sample, (features, stage_caches)), (&s, &ds)) in batch
        .iter()
        .zip(&caches)
        .zip(scores.iter().zip(&out.d_scores))
    {
        let d_logit = ds * s * (1.0 - s);
        if d_logit == 0.0 {
            continue;
        }
        for (g, f) in grads.wc.iter_mut().zip(features) {
            *g += d_logit * f;
        }
        grads.bc += d_logit;
        for (k, cache) in stage_caches.iter().enumerate() {
            let d_pooled: Vec<f64> = params.wc[k * cfg.d..(k + 1) * cfg.d]
                .iter()
                .map(|w| d_logit * w)
                .collect();
            stage_backward(
                &sample.stages[k],
                sample.weights[k].as_ref(),
                &params.stages[k],
                cfg,
                cache,
                &d_pooled,
                &mut grads.stages[k],
            )?;
        }
    }
    if lambda != 0.0 {
        grads.add_scaled(params, 2.0 * lambda);
    }
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_score_positive() {
        let out = loss(&[0.5], &[true], 0.0, &[], 1.0).unwrap();
        assert!((out.value - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction_limit() {
        let out = loss(&[1.0, 0.0], &[true, false], 0.0, &[], 1.0).unwrap();
        assert!(out.value <= 1e-11, "{}", out.value);
        assert_eq!(out.d_scores, vec![0.0, 0.0]);
    }

    #[test]
    fn regularizer_only() {
        // ‖θ‖² = 4, λ = 0.1, cross-entropy term ≈ 0
        let out = loss(&[1.0], &[true], 0.1, &[2.0, 0.0], 1.0).unwrap();
        assert!((out.value - 0.4).abs() < 1e-11);
        assert_eq!(out.d_theta, vec![0.4, 0.0]);
    }

    #[test]
    fn empty_and_mismatched() {
        assert!(matches!(loss(&[], &[], 0.0, &[], 1.0), Err(Error::Size(_))));
        assert!(loss(&[0.5], &[true, false], 0.0, &[], 1.0).is_err());
    }

    #[test]
    fn zero_classifier_scores_half() {
        let cfg = ModelConfig {
            d: 2,
            d_k: 1,
            heads: 1,
            stages: 2,
            ffn_hidden: 3,
            ..ModelConfig::default()
        };
        let mut p = ModelParams::init(&cfg, 4);
        p.wc.iter_mut().for_each(|w| *w = 0.0);
        let z = vec![
            Matrix::from_rows(&[[0.1, 2.0], [-1.0, 0.3]]),
            Matrix::from_rows(&[[1.0, 1.0], [0.0, -4.0], [2.5, 0.5]]),
        ];
        assert_eq!(forward(&z, &p, &cfg).unwrap(), 0.5);
    }

    #[test]
    fn wrong_stage_count() {
        let cfg = ModelConfig {
            d: 2,
            stages: 2,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg, 0);
        assert!(forward(&[Matrix::zeros(2, 2)], &p, &cfg).is_err());
    }
}
