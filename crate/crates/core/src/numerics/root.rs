use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// Bracketed root refinement (Brent: bisection with inverse quadratic and
/// secant acceleration). Every iterate stays inside the current bracket.
///
/// Returns once the bracket is narrower than `tol` (plus a few ulps of the
/// root) or an exact zero is hit.
pub fn refine_root<F>(mut f: F, bracket_lo: f64, bracket_hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::invalid("root tolerance must be positive"));
    }
    let (mut a, mut b) = (bracket_lo, bracket_hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::InvalidBracket { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if fb.is_nan() {
            return Err(Error::EvaluationFailure(format!("root function is NaN at {b}")));
        }
    }
    Err(Error::NonConvergence {
        subdivisions: MAX_ITERATIONS,
        estimate: b,
        error: (c - b).abs(),
    })
}

/// Scan `grid` (ordered) for sign changes of `f`; returns the consecutive
/// pairs whose values differ in sign, together with the evaluated values.
pub fn sign_changes<F>(mut f: F, grid: &[f64]) -> Result<(Vec<(f64, f64)>, Vec<f64>)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let mut brackets = Vec::new();
    for i in 1..grid.len() {
        let (u, v) = (values[i - 1], values[i]);
        if (u < 0.0 && v > 0.0) || (u > 0.0 && v < 0.0) {
            brackets.push((grid[i - 1], grid[i]));
        }
    }
    Ok((brackets, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_root_of_four() {
        let r = refine_root(|x| Ok(x * x - 4.0), 0.0, 5.0, 1e-10).unwrap();
        assert!((r - 2.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_threshold_equation() {
        // exp(u/2) = 1 + u has its positive root near 2.51286.
        let r = refine_root(|u: f64| Ok((u / 2.0).exp() - 1.0 - u), 1.0, 5.0, 1e-10).unwrap();
        assert!((r - 2.51286).abs() < 1e-5, "{r}");
    }

    #[test]
    fn odd_function_root_at_zero() {
        let r = refine_root(Ok, -1.0, 1.0, 1e-12).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn endpoint_root_is_accepted() {
        assert_eq!(refine_root(|x| Ok(x - 1.0), 1.0, 3.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn same_sign_is_invalid_bracket() {
        let err = refine_root(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket { .. }));
    }

    #[test]
    fn iterates_stay_in_bracket() {
        let mut seen = Vec::new();
        let _ = refine_root(
            |x: f64| {
                seen.push(x);
                Ok(x.powi(3) - 0.3)
            },
            0.0,
            2.0,
            1e-13,
        )
        .unwrap();
        assert!(seen.iter().all(|&x| (0.0..=2.0).contains(&x)));
    }

    #[test]
    fn sign_changes_are_located() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let (br, _) = sign_changes(|x| Ok((x - 2.5) * (x - 7.5)), &grid).unwrap();
        assert_eq!(br, vec![(2.0, 3.0), (7.0, 8.0)]);
    }
}
