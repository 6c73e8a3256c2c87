use crate::error::{Error, Result};

/// Symmetric difference quotient `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("difference step must be positive"));
    }
    let up = f(x + h)?;
    let down = f(x - h)?;
    let d = (up - down) / (2.0 * h);
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::EvaluationFailure(format!(
            "non-finite difference quotient at x = {x}"
        )))
    }
}

/// Symmetric second difference `(f(x + h) - 2 f(x) + f(x - h)) / h^2`.
pub fn second_difference<F>(mut f: F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("difference step must be positive"));
    }
    let up = f(x + h)?;
    let mid = f(x)?;
    let down = f(x - h)?;
    Ok((up - 2.0 * mid + down) / (h * h))
}

/// Default step for parameter derivatives: `1e-5 * max(|lambda|, 1)`.
pub fn default_parameter_step(lambda: f64) -> f64 {
    1e-5 * lambda.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_quadratics() {
        let d = central_difference(|x| Ok(x * x), 1.0, 0.1).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_lines() {
        for &(x, h) in &[(0.0, 1.0), (-3.5, 0.25), (1e3, 7.0)] {
            let d = central_difference(Ok, x, h).unwrap();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_within_taylor_remainder() {
        let d = central_difference(|x: f64| Ok(x.exp()), 0.0, 1e-4).unwrap();
        assert!((d - 1.0).abs() < 1e-8);
    }

    #[test]
    fn failure_propagates() {
        let err = central_difference(|_| Err(Error::EvaluationFailure("boom".into())), 0.0, 0.1);
        assert!(matches!(err, Err(Error::EvaluationFailure(_))));
    }

    #[test]
    fn rejects_non_positive_step() {
        assert!(central_difference(Ok, 0.0, 0.0).is_err());
    }

    #[test]
    fn second_difference_of_cubic() {
        let d = second_difference(|x| Ok(x * x * x), 2.0, 1e-3).unwrap();
        assert!((d - 12.0).abs() < 1e-5);
    }
}
