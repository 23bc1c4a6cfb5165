//! Differentiable matrix operations with explicit pullbacks.
//!
//! Each operation comes in two flavours: a plain forward function plus a
//! `*_backward` function that maps an upstream sensitivity to input
//! sensitivities, and a `*_with_grad` constructor bundling both into a
//! [`GradientPair`]. The model code calls the backward functions directly
//! with cached forward values; the pair form is the generic surface.

use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

type Pullback = Box<dyn Fn(&Matrix) -> Result<Vec<Matrix>> + Send + Sync>;

/// A forward value together with the map from upstream sensitivities to
/// sensitivities of each input (in argument order).
pub struct GradientPair {
    pub value: Matrix,
    pullback: Pullback,
}

impl GradientPair {
    pub fn new(value: Matrix, pullback: Pullback) -> Self {
        Self { value, pullback }
    }

    pub fn pullback(&self, upstream: &Matrix) -> Result<Vec<Matrix>> {
        if upstream.shape() != self.value.shape() {
            return Err(Error::shape(
                "pullback",
                self.value.shape_str(),
                upstream.shape_str(),
            ));
        }
        (self.pullback)(upstream)
    }
}

impl fmt::Debug for GradientPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GradientPair")
            .field("value", &self.value)
            .finish_non_exhaustive()
    }
}

/// `C = A · B`.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape("matmul", a.shape_str(), b.shape_str()));
    }
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    if n >= p {
        return Matrix::from_vec(m, p, dot_rows(a.as_slice(), &b.transpose().into_vec(), m, p, n));
    }
    let mut out = vec![0.0; m * p];
    let av = a.as_slice();
    let bv = b.as_slice();
    for i in 0..m {
        let orow = &mut out[i * p..(i + 1) * p];
        for k in 0..n {
            let aik = av[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &bv[k * p..(k + 1) * p];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    Matrix::from_vec(m, p, out)
}

/// Dot product with four independent partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    let mut acc = [0.0; 4];
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `out[i, j] = ⟨a_i, b_j⟩` for row-major `a` (`m × n`) and `b` (`p × n`).
fn dot_rows(a: &[f64], b: &[f64], m: usize, p: usize, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(m * p);
    for arow in a.chunks_exact(n.max(1)).take(m) {
        for brow in b.chunks_exact(n.max(1)).take(p) {
            out.push(dot(arow, brow));
        }
    }
    out.resize(m * p, 0.0);
    out
}

/// `C = A · Bᵀ` without materialising the transpose.
pub fn matmul_nt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape("matmul_nt", a.shape_str(), b.shape_str()));
    }
    let (m, n, p) = (a.rows(), a.cols(), b.rows());
    if n < p {
        return matmul(a, &b.transpose());
    }
    Matrix::from_vec(m, p, dot_rows(a.as_slice(), b.as_slice(), m, p, n))
}

/// `C = Aᵀ · B` without materialising the transpose.
pub fn matmul_tn(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.rows() != b.rows() {
        return Err(Error::shape("matmul_tn", a.shape_str(), b.shape_str()));
    }
    let (n, m, p) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * p];
    for k in 0..n {
        let arow = a.row(k);
        let brow = b.row(k);
        for (i, &aki) in arow.iter().enumerate() {
            if aki == 0.0 {
                continue;
            }
            let orow = &mut out[i * p..(i + 1) * p];
            for (o, &bkj) in orow.iter_mut().zip(brow) {
                *o += aki * bkj;
            }
        }
    }
    Matrix::from_vec(m, p, out)
}

/// Sensitivities of `A · B` w.r.t. `A` and `B`: `(G Bᵀ, Aᵀ G)`.
pub fn matmul_backward(a: &Matrix, b: &Matrix, upstream: &Matrix) -> Result<(Matrix, Matrix)> {
    if upstream.shape() != (a.rows(), b.cols()) {
        return Err(Error::shape(
            "matmul_backward",
            format!("{}x{}", a.rows(), b.cols()),
            upstream.shape_str(),
        ));
    }
    Ok((matmul_nt(upstream, b)?, matmul_tn(a, upstream)?))
}

pub fn matmul_with_grad(a: &Matrix, b: &Matrix) -> Result<GradientPair> {
    let value = matmul(a, b)?;
    let (a, b) = (a.clone(), b.clone());
    Ok(GradientPair::new(
        value,
        Box::new(move |g| {
            let (ga, gb) = matmul_backward(&a, &b, g)?;
            Ok(vec![ga, gb])
        }),
    ))
}

/// Row-wise softmax with row-max subtraction.
pub fn softmax_rows(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Given softmax output `y` and upstream `g`, returns
/// `y ⊙ (g − rowsum(g ⊙ y))`.
pub fn softmax_rows_backward(y: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    if y.shape() != upstream.shape() {
        return Err(Error::shape(
            "softmax_rows_backward",
            y.shape_str(),
            upstream.shape_str(),
        ));
    }
    let mut out = Matrix::zeros(y.rows(), y.cols());
    for r in 0..y.rows() {
        let yr = y.row(r);
        let gr = upstream.row(r);
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for ((o, &yv), &gv) in out.row_mut(r).iter_mut().zip(yr).zip(gr) {
            *o = yv * (gv - dot);
        }
    }
    Ok(out)
}

pub fn softmax_rows_with_grad(m: &Matrix) -> GradientPair {
    let value = softmax_rows(m);
    let y = value.clone();
    GradientPair::new(
        value,
        Box::new(move |g| Ok(vec![softmax_rows_backward(&y, g)?])),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementwise {
    Relu,
    Sigmoid,
    Ln,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn elementwise(kind: Elementwise, m: &Matrix) -> Result<Matrix> {
    match kind {
        Elementwise::Relu => Ok(m.map(|v| v.max(0.0))),
        Elementwise::Sigmoid => Ok(m.map(sigmoid)),
        Elementwise::Ln => {
            if let Some(bad) = m.as_slice().iter().find(|&&v| v <= 0.0) {
                return Err(Error::Domain {
                    op: "ln",
                    detail: format!("non-positive entry {bad}"),
                });
            }
            Ok(m.map(f64::ln))
        }
    }
}

/// Derivative of the elementwise map evaluated at the input `x`, multiplied
/// into `upstream`. The relu derivative at exactly zero is zero.
pub fn elementwise_backward(kind: Elementwise, x: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    let local = match kind {
        Elementwise::Relu => x.map(|v| if v > 0.0 { 1.0 } else { 0.0 }),
        Elementwise::Sigmoid => x.map(|v| {
            let s = sigmoid(v);
            s * (1.0 - s)
        }),
        Elementwise::Ln => x.map(|v| 1.0 / v),
    };
    local.hadamard(upstream)
}

pub fn elementwise_with_grad(kind: Elementwise, m: &Matrix) -> Result<GradientPair> {
    let value = elementwise(kind, m)?;
    let x = m.clone();
    Ok(GradientPair::new(
        value,
        Box::new(move |g| Ok(vec![elementwise_backward(kind, &x, g)?])),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn matmul_identity() {
        let b = Matrix::from_rows(&[[1.5, -2.0, 3.0], [0.25, 4.0, -1.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn matmul_hand_case() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::from_rows(&[[5.0], [6.0]]);
        // 1*5 + 2*6 = 17, 3*5 + 4*6 = 39
        assert_eq!(matmul(&a, &b).unwrap(), Matrix::from_rows(&[[17.0], [39.0]]));
    }

    #[test]
    fn matmul_zero_annihilates() {
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::zeros(3, 2), &b).unwrap(), Matrix::zeros(3, 2));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("matmul"), "{msg}");
    }

    #[test]
    fn transposed_variants_agree() {
        let a = Matrix::from_rows(&[[1.0, -2.0, 0.5], [3.0, 0.0, 4.0]]);
        let b = Matrix::from_rows(&[[2.0, 1.0, -1.0], [0.0, 3.0, 2.0]]);
        let nt = matmul_nt(&a, &b).unwrap();
        assert_eq!(nt, matmul(&a, &b.transpose()).unwrap());
        let tn = matmul_tn(&a, &b).unwrap();
        assert_eq!(tn, matmul(&a.transpose(), &b).unwrap());
    }

    #[test]
    fn softmax_uniform_row() {
        let y = softmax_rows(&Matrix::zeros(1, 3));
        for &v in y.as_slice() {
            assert!(close(v, 1.0 / 3.0, 1e-15));
        }
    }

    #[test]
    fn softmax_ln2_row() {
        let y = softmax_rows(&Matrix::from_rows(&[[2f64.ln(), 0.0]]));
        assert!(close(y.get(0, 0), 2.0 / 3.0, 1e-15));
        assert!(close(y.get(0, 1), 1.0 / 3.0, 1e-15));
    }

    #[test]
    fn softmax_shift_invariant() {
        let m = Matrix::from_rows(&[[0.3, -1.2, 2.5, 0.0]]);
        let shifted = m.map(|v| v + 17.25);
        assert!(softmax_rows(&m).max_abs_diff(&softmax_rows(&shifted)) < 1e-15);
    }

    #[test]
    fn softmax_survives_large_inputs() {
        let y = softmax_rows(&Matrix::from_rows(&[[1000.0, 999.0, -1000.0]]));
        assert!(y.is_finite());
        assert!(close(y.as_slice().iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn elementwise_values() {
        let s = elementwise(Elementwise::Sigmoid, &Matrix::from_rows(&[[0.0, 3f64.ln()]])).unwrap();
        assert_eq!(s.get(0, 0), 0.5);
        assert!(close(s.get(0, 1), 0.75, 1e-15));
        let r = elementwise(Elementwise::Relu, &Matrix::from_rows(&[[-1.0, 2.0]])).unwrap();
        assert_eq!(r.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn ln_rejects_non_positive() {
        let err = elementwise(Elementwise::Ln, &Matrix::from_rows(&[[1.0, 0.0]])).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn relu_derivative_at_zero_is_zero() {
        let x = Matrix::from_rows(&[[0.0, 1.0, -1.0]]);
        let g = elementwise_backward(Elementwise::Relu, &x, &Matrix::filled(1, 3, 1.0)).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn pullback_rejects_wrong_upstream_shape() {
        let pair = softmax_rows_with_grad(&Matrix::zeros(2, 2));
        assert!(pair.pullback(&Matrix::zeros(1, 2)).is_err());
        let grads = pair.pullback(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(grads[0].shape(), (2, 2));
    }
}
