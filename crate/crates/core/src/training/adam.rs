use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First/second moment estimates and the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: BETA1,
            beta2: BETA2,
            eps: ADAM_EPS,
        }
    }
}

/// One bias-corrected Adam update of `theta` in place.
///
/// A non-finite gradient aborts before any state is touched.
pub fn adam_step(theta: &mut [f64], grad: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if theta.len() != grad.len() || state.m.len() != theta.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} parameters / {} moments", theta.len(), state.m.len()),
            format!("{} gradient entries", grad.len()),
        ));
    }
    if !(lr > 0.0) {
        return Err(Error::Config(format!("learning rate must be positive, got {lr}")));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Training(format!(
            "non-finite gradient {} at parameter {i} (step {})",
            grad[i],
            state.t + 1
        )));
    }
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (((p, &g), m), v) in theta
        .iter_mut()
        .zip(grad)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}
