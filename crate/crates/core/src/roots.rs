//! Bracketed scalar root finders.

use crate::error::{Error, Result};

const MAX_ITER: usize = 400;

/// Safeguarded Newton iteration on a sign-changing bracket `[lo, hi]`.
///
/// `f` returns the value and the derivative. Newton steps that leave the
/// current bracket, or fail to halve it, are replaced by bisection.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let (fa, _) = f(a)?;
    let (fb, _) = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket(format!(
            "f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )));
    }
    let rising = fb > 0.0;
    let mut x = 0.5 * (a + b);
    let mut width_before = b - a;
    for _ in 0..MAX_ITER {
        let (fx, dfx) = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            b = x;
        } else {
            a = x;
        }
        if b - a <= xtol * (1.0 + x.abs()) {
            return Ok(0.5 * (a + b));
        }
        let newton = x - fx / dfx;
        let width = b - a;
        x = if newton.is_finite() && newton > a && newton < b && width < 0.5 * width_before {
            newton
        } else if newton.is_finite() && newton > a && newton < b {
            // allow Newton while it keeps shrinking the bracket quickly
            let mid = 0.5 * (a + b);
            if (newton - x).abs() < 0.25 * width {
                newton
            } else {
                mid
            }
        } else {
            0.5 * (a + b)
        };
        width_before = width;
    }
    Err(Error::NoConvergence(format!(
        "newton_bisect: bracket [{a}, {b}] after {MAX_ITER} iterations"
    )))
}

/// Brent's method on a sign-changing bracket.
pub fn brent<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket(format!(
            "f({a}) = {fa} and f({b}) = {fb} have the same sign"
        )));
    }
    let (mut c, mut fc) = (a, fa);
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence(format!(
        "brent: no convergence on [{lo}, {hi}]"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_missing_bracket() {
        assert!(matches!(
            brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12),
            Err(Error::NoBracket(_))
        ));
    }

    #[test]
    fn newton_bisect_survives_flat_derivative() {
        // sqrt-like behaviour near the root makes plain Newton overshoot
        let r = newton_bisect(
            |x| Ok((x.abs().sqrt().copysign(x - 0.0) - 0.5, 0.5 / x.abs().sqrt().max(1e-300))),
            -1.0,
            1.0,
            1e-15,
        )
        .unwrap();
        assert!((r - 0.25).abs() < 1e-14);
    }
}
