//! Bracketing scalar root finders.

use crate::error::{Error, Result};

/// Stopping rule for the bracketing solvers: the bracket width must fall
/// below `atol + rtol * |x|`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 0.0,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

fn check_bracket(a: f64, fa: f64, b: f64, fb: f64) -> Result<()> {
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        return Err(Error::NoSignChange { a, fa, b, fb });
    }
    Ok(())
}

/// Plain bisection on `[a, b]`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Root> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let fhi = f(hi);
    check_bracket(lo, flo, hi, fhi)?;
    if flo == 0.0 {
        return Ok(Root { x: lo, fx: 0.0, iterations: 0 });
    }
    if fhi == 0.0 {
        return Ok(Root { x: hi, fx: 0.0, iterations: 0 });
    }
    for it in 1..=tol.max_iter {
        let mid = lo + 0.5 * (hi - lo);
        let fm = f(mid);
        if fm == 0.0 || hi - lo <= tol.atol + tol.rtol * mid.abs() || mid == lo || mid == hi {
            return Ok(Root { x: mid, fx: fm, iterations: it });
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotConverged { iterations: tol.max_iter })
}

/// Brent's method: inverse quadratic interpolation and secant steps
/// safeguarded by bisection.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Root> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    check_bracket(a, fa, b, fb)?;
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, iterations: 0 });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 1..=tol.max_iter {
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
        let step_tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * (tol.atol + tol.rtol * b.abs());
        let half = 0.5 * (c - b);
        if half.abs() <= step_tol || fb == 0.0 {
            return Ok(Root { x: b, fx: fb, iterations: it });
        }
        if e.abs() >= step_tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * half * q - (step_tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > step_tol {
            d
        } else {
            step_tol.copysign(half)
        };
        fb = f(b);
    }
    Err(Error::RootNotConverged { iterations: tol.max_iter })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let tol = Tolerance { rtol: 1e-14, ..Default::default() };
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, tol).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, tol).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_beats_bisection() {
        let tol = Tolerance { rtol: 1e-13, ..Default::default() };
        let f = |x: f64| x.cos() - x;
        let b = brent(f, 0.0, 1.0, tol).unwrap();
        let s = bisect(f, 0.0, 1.0, tol).unwrap();
        assert!((b.x - s.x).abs() < 1e-12);
        assert!(b.iterations < s.iterations);
    }

    #[test]
    fn endpoint_root() {
        let r = brent(|x| x - 1.0, 1.0, 3.0, Tolerance::default()).unwrap();
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn no_sign_change() {
        assert!(matches!(
            brent(|x| x * x + 1.0, -1.0, 1.0, Tolerance::default()),
            Err(Error::NoSignChange { .. })
        ));
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, Tolerance::default()),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn steep_cubic() {
        let r = brent(|x| (x - 0.3).powi(3), -5.0, 7.0, Tolerance::default()).unwrap();
        assert!((r.x - 0.3).abs() < 1e-4);
    }
}
