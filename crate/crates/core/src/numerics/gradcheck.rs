use crate::error::{Error, Result};

/// Compares an analytic gradient against central finite differences.
///
/// `f` returns the scalar value and its analytic gradient at a point. The
/// result is `max_i |g_i − ĝ_i| / max(1, |g_i|)` where `ĝ` is the central
/// difference estimate with step `h`.
pub fn grad_check<F>(f: F, x0: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(h > 0.0) {
        return Err(Error::GradCheck(format!("step must be positive, got {h}")));
    }
    let (value, analytic) = f(x0)?;
    if !value.is_finite() {
        return Err(Error::GradCheck("non-finite value at x0".into()));
    }
    if analytic.len() != x0.len() {
        return Err(Error::GradCheck(format!(
            "gradient has {} entries for {} coordinates",
            analytic.len(),
            x0.len()
        )));
    }
    let numeric = central_differences(|x| f(x).map(|(v, _)| v), x0, h)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max))
}

/// Central-difference gradient estimate of a scalar function.
pub fn central_differences<F>(f: F, x0: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let orig = x[i];
        x[i] = orig + h;
        let plus = f(&x)?;
        x[i] = orig - h;
        let minus = f(&x)?;
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::GradCheck(format!(
                "non-finite evaluation at coordinate {i}"
            )));
        }
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ops::sigmoid;

    #[test]
    fn quadratic() {
        let err = grad_check(
            |x| Ok((x.iter().map(|v| v * v).sum(), x.iter().map(|v| 2.0 * v).collect())),
            &[1.0, 2.0],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn constant_function() {
        let err = grad_check(|_| Ok((3.0, vec![0.0, 0.0, 0.0])), &[0.1, -4.0, 9.0], 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }

    #[test]
    fn sigmoid_at_zero() {
        let err = grad_check(|x| Ok((sigmoid(x[0]), vec![0.25])), &[0.0], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn detects_wrong_gradient() {
        let err = grad_check(|x| Ok((x[0] * x[0], vec![x[0]])), &[3.0], 1e-5).unwrap();
        assert!(err > 0.4);
    }

    #[test]
    fn non_finite_is_failure() {
        let res = grad_check(
            |x| Ok((if x[0] > 0.0 { f64::NAN } else { 0.0 }, vec![0.0])),
            &[0.0],
            1e-5,
        );
        assert!(matches!(res, Err(Error::GradCheck(_))));
    }
}
