use std::f64::consts::E;

use super::Tolerance;
use crate::error::{domain, Error, Result};

/// Principal branch of the Lambert W function, by Halley iteration.
pub fn lambert_w0(x: f64, tol: Tolerance) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        return domain(format!("lambert_w0 needs x >= -1/e, got {x}"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch {
        return Ok(-1.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if x < -0.25 {
        // series about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x <= E {
        x.ln_1p()
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..tol.max_iter {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 {
            return Ok(w);
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = (w - step).max(-1.0);
        if !next.is_finite() {
            break;
        }
        let delta = (next - w).abs();
        w = next;
        if delta <= tol.abs.min(1e-15).max(tol.rel.min(1e-15) * w.abs()) || f == 0.0 {
            return Ok(w);
        }
    }
    // Halley stalls at the last ulp; accept if the defining identity already holds.
    let resid = (w * w.exp() - x).abs();
    if tol.accepts(resid, x) {
        return Ok(w);
    }
    Err(Error::NumericalFailure(format!(
        "lambert_w0 did not converge for x={x}"
    )))
}

/// `W(e^ln_x)`, for arguments too large to represent directly.
pub fn lambert_w0_of_exp(ln_x: f64, tol: Tolerance) -> Result<f64> {
    if ln_x.is_nan() {
        return domain("lambert_w0_of_exp got NaN");
    }
    if ln_x < 500.0 {
        return lambert_w0(ln_x.exp(), tol);
    }
    // solve w + ln w = ln_x
    let mut w = ln_x - ln_x.ln();
    for _ in 0..tol.max_iter {
        let g = w + w.ln() - ln_x;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= tol.abs.max(tol.rel * w.abs()) {
            return Ok(w);
        }
    }
    Err(Error::NumericalFailure(format!(
        "lambert_w0_of_exp did not converge for ln_x={ln_x}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0, tol()).unwrap(), 0.0);
        assert!((lambert_w0(E, tol()).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(lambert_w0(-1.0 / E, tol()).unwrap(), -1.0);
        // W(1) is the omega constant
        assert!((lambert_w0(1.0, tol()).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-15);
        assert!(lambert_w0(-0.5, tol()).is_err());
    }

    #[test]
    fn asymptotic_expansion_at_one_million() {
        let x = 1e6_f64;
        let w = lambert_w0(x, tol()).unwrap();
        assert!(((w * w.exp() - x) / x).abs() < 1e-12);
        assert!((w - (x.ln() - x.ln().ln())).abs() < 0.2);
    }

    #[test]
    fn near_branch_point() {
        for &x in &[-0.3678, -0.36, -0.3, -0.2, -1e-8, 1e-10] {
            let w = lambert_w0(x, tol()).unwrap();
            assert!(w >= -1.0);
            assert!((w * w.exp() - x).abs() <= 1e-12, "x={x}, w={w}");
        }
    }

    #[test]
    fn log_argument_matches_direct() {
        for &l in &[-3.0, 0.0, 10.0, 300.0, 499.0] {
            let a = lambert_w0(f64::exp(l), tol()).unwrap();
            let b = lambert_w0_of_exp(l, tol()).unwrap();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
        }
        let w = lambert_w0_of_exp(5000.0, tol()).unwrap();
        assert!((w + w.ln() - 5000.0).abs() < 1e-9);
    }
}
