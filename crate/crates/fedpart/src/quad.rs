//! Adaptive Simpson quadrature for smooth decaying integrands on [0, inf).

use crate::error::{Error, Result};

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
///
/// Classic recursive bisection with the 1/15 Richardson error estimate; the
/// depth cap only guards against pathological integrands.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }

    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Integrate a nonnegative decaying integrand over [0, inf): the upper limit
/// is pushed out by doubling until the integrand falls below `tail_cut`, then
/// the finite integral is evaluated adaptively to `tol`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: &F, tol: f64, tail_cut: f64) -> Result<f64> {
    if !tol.is_finite() || tol <= 0.0 || !tail_cut.is_finite() || tail_cut <= 0.0 {
        return Err(Error::Invalid("tolerances must be positive".into()));
    }
    let mut upper = 1.0;
    let mut guard = 0;
    while f(upper) >= tail_cut {
        upper *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Invalid(
                "integrand does not decay below the tail cutoff".into(),
            ));
        }
    }
    Ok(integrate(f, 0.0, upper, tol))
}
