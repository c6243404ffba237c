//! Adaptive and fixed-grid Simpson quadrature.
//!
//! These routines back the oracle paths (overlaps of the exact Gaussian packet,
//! projector elements, grid window probabilities). They are deliberately plain
//! so that they share nothing with the closed-form evaluations they check.

use crate::{Error, Result};

/// Maximum bisection depth for a single panel.
pub const MAX_DEPTH: u32 = 40;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) * (fa + 4.0 * fm + fb) / 6.0
}

/// Integrates `f` over `[a, b]` by recursive Simpson bisection with the
/// Richardson-corrected local error estimate `|S2 - S1| / 15`.
///
/// Returns the integral estimate. When some subinterval still misses its share
/// of `abs_tol` at [`MAX_DEPTH`], the summed residual of those subintervals is
/// reported through [`Error::NonConvergence`].
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(abs_tol > 0.0) {
        return Err(Error::invalid("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let root = Panel { a, b, fa, fm, fb, whole: simpson(a, b, fa, fm, fb) };

    let mut total = 0.0;
    let mut unresolved = 0.0;
    let mut stack = vec![(root, abs_tol, 0u32)];
    while let Some((p, tol, depth)) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let delta = left + right - p.whole;
        // Depth >= 2 guards against a coincidental match of the two coarsest
        // estimates on oscillatory integrands.
        if depth >= 2 && delta.abs() <= 15.0 * tol {
            total += left + right + delta / 15.0;
        } else if depth >= MAX_DEPTH {
            total += left + right + delta / 15.0;
            unresolved += delta.abs() / 15.0;
        } else {
            stack.push((
                Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left },
                0.5 * tol,
                depth + 1,
            ));
            stack.push((
                Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right },
                0.5 * tol,
                depth + 1,
            ));
        }
    }
    if unresolved > abs_tol {
        return Err(Error::NonConvergence {
            what: "adaptive Simpson quadrature".into(),
            residual: unresolved,
        });
    }
    Ok(total)
}

/// Splits `[a, b]` into `panels` equal pieces and runs [`adaptive_simpson`] on
/// each, sharing `abs_tol` in proportion to panel width.
///
/// Oscillatory integrands need at least a few panels per period, otherwise the
/// first Simpson estimates can sample only nodes of the integrand.
pub fn composite_adaptive_simpson<F>(f: &F, a: f64, b: f64, panels: usize, abs_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let tol = abs_tol / panels as f64;
    let mut total = 0.0;
    let mut residual = 0.0;
    let mut failed = false;
    for i in 0..panels {
        let lo = a + h * i as f64;
        let hi = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
        match adaptive_simpson(f, lo, hi, tol) {
            Ok(v) => total += v,
            Err(Error::NonConvergence { residual: r, .. }) => {
                failed = true;
                residual += r;
            }
            Err(e) => return Err(e),
        }
    }
    if failed && residual > abs_tol {
        return Err(Error::NonConvergence {
            what: "composite adaptive Simpson quadrature".into(),
            residual,
        });
    }
    Ok(total)
}

/// Composite Simpson rule over uniformly spaced samples with spacing `h`.
///
/// An even number of intervals uses the 1/3 rule throughout; an odd number
/// closes with a 3/8 panel over the last three intervals. Two samples fall back
/// to the trapezoid rule.
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let intervals = n - 1;
            let (even_end, tail) = if intervals % 2 == 0 { (n - 1, false) } else { (n - 4, true) };
            let mut s = values[0] + values[even_end];
            for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = h / 3.0 * s;
            if tail {
                let v = &values[n - 4..];
                total += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_with_panels() {
        let f = |x: f64| (50.0 * PI * x).sin().powi(2);
        let v = composite_adaptive_simpson(&f, 0.0, 1.0, 200, 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-11);
    }

    #[test]
    fn non_convergence_is_reported() {
        // discontinuous integrand with a tolerance below what depth 40 can resolve
        let f = |x: f64| if x < 1.0 / 3.0 { 0.0 } else { 1.0e6 };
        match adaptive_simpson(&f, 0.0, 1.0, 1e-30) {
            Err(Error::NonConvergence { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn sampled_simpson_odd_and_even_counts() {
        for n in [2usize, 3, 4, 5, 10, 11, 101] {
            let h = 1.0 / (n - 1) as f64;
            let vals: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
            let expect = 1.0 / 3.0;
            let tol = if n == 2 { 0.2 } else { 1e-14 };
            assert!((simpson_samples(&vals, h) - expect).abs() < tol, "n={n}");
        }
    }
}
