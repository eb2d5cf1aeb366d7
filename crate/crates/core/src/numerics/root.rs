use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Bracketed root-finder for a continuous, strictly monotone function.
///
/// Brent's scheme: inverse quadratic interpolation with a secant step and
/// bisection fallback. The bracket is preserved at every iteration, so the
/// result never leaves `[lo, hi]`. Terminates when the bracket width falls
/// below `tol` (absolute, plus a floating-point floor) or an evaluation
/// hits zero exactly.
pub fn find_root_monotone<F: Fn(f64) -> f64>(g: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Parameter(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Parameter(format!("invalid tolerance {tol}")));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation { node: x, value: v })
        }
    };

    let mut a = lo;
    let mut b = hi;
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing { lo, hi, glo: fa, ghi: fb });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
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
            // Attempt interpolation: secant if two points, IQI if three.
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
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
        fb = eval(b)?;
        if fb == 0.0 {
            return Ok(b);
        }
    }
    Err(Error::Convergence(format!(
        "root not bracketed to tolerance {tol} within {MAX_ITER} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let root = find_root_monotone(|x| x - 2.0, 0.0, 4.0, 1e-12).unwrap();
        assert!((root - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exp_identity_root() {
        let root = find_root_monotone(|x| x.exp() - 1.0, -1.0, 1.0, 1e-12).unwrap();
        assert!(root.abs() < 1e-12);
    }

    #[test]
    fn decaying_exponential_root_is_ln_two() {
        let root = find_root_monotone(|y| (-y).exp() - 0.5, 0.0, 2.0, 1e-12).unwrap();
        assert!((root - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn missing_sign_change_is_reported() {
        let err = find_root_monotone(|x| x + 10.0, 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Bracketing { .. }));
    }

    #[test]
    fn endpoint_roots_returned_immediately() {
        assert_eq!(find_root_monotone(|x| x, 0.0, 1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(find_root_monotone(|x| x - 1.0, 0.0, 1.0, 1e-12).unwrap(), 1.0);
    }
}
