//! One-dimensional solvers: monotone bisection and golden-section refinement.

use crate::error::{Error, Result};

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Solve `f(x) = target` for strictly decreasing `f`, searching in log-space.
///
/// The bracket is grown geometrically from `x_init` until the target is
/// straddled, then bisected. `rel_tol` applies to the function value.
pub fn bisect_decreasing<F: Fn(f64) -> Result<f64>>(
    f: F,
    x_init: f64,
    target: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    assert!(x_init > 0.0);
    let mut lo = x_init;
    let mut grow = 0;
    while f(lo)? < target {
        lo /= 8.0;
        grow += 1;
        if grow > 300 {
            return Err(Error::Bracket(format!(
                "no lower bracket below x = {lo:.3e} for target {target:.6e}"
            )));
        }
    }
    let mut hi = lo.max(x_init);
    grow = 0;
    while f(hi)? > target {
        hi *= 8.0;
        grow += 1;
        if grow > 300 {
            return Err(Error::Bracket(format!(
                "no upper bracket above x = {hi:.3e} for target {target:.6e}"
            )));
        }
    }
    let scale = target.abs().max(1e-300);
    let mut mid = lo;
    for _ in 0..max_iter {
        mid = ((lo.ln() + hi.ln()) / 2.0).exp();
        let fm = f(mid)?;
        if ((fm - target) / scale).abs() <= rel_tol {
            return Ok(mid);
        }
        if fm > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi / lo - 1.0).abs() < 1e-15 {
            return Ok(mid);
        }
    }
    Ok(mid)
}

/// Golden-section minimization of `f` on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    let mut a = a;
    let mut b = b;
    let mut x1 = b - INV_GOLDEN * (b - a);
    let mut x2 = a + INV_GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a).abs() > x_tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Scan `xs` for the minimizing index, then refine with golden section on the
/// bracketing neighbours. Returns (argmin, min).
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: &F, xs: &[f64], x_tol: f64) -> (f64, f64) {
    assert!(!xs.is_empty());
    let mut best = 0usize;
    let mut best_v = f64::INFINITY;
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x);
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    let lo = if best == 0 { xs[0] } else { xs[best - 1] };
    let hi = if best + 1 == xs.len() {
        xs[xs.len() - 1]
    } else {
        xs[best + 1]
    };
    if hi > lo {
        let (x, v) = golden_min(f, lo, hi, x_tol);
        if v < best_v {
            return (x, v);
        }
    }
    (xs[best], best_v)
}
