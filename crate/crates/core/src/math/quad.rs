//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 7-point Gauss / 15-point Kronrod pair drives a worst-panel-first
//! subdivision loop. Callers supply explicit breakpoints when an integrand
//! has a narrow peak inside a wide interval, and the unit-interval helper
//! applies the `z = s^2` endpoint substitution used for distortion
//! derivatives that blow up at 0 and 1.

use crate::error::{Error, Result};

// Kronrod abscissae on [0,1] (positive half), Gauss-7 embedded.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_panels: 4096,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        QuadConfig {
            abs_tol: rel_tol * 1e-3,
            rel_tol,
            max_panels: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

/// Single Gauss–Kronrod panel; returns (kronrod, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fabs = fc.abs() * WGK[7];
    let mut samples = [0.0f64; 15];
    samples[7] = fc;
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        samples[j] = f1;
        samples[14 - j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        fabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut fasc = WGK[7] * (samples[7] - mean).abs();
    for j in 0..7 {
        fasc += WGK[j] * ((samples[j] - mean).abs() + (samples[14 - j] - mean).abs());
    }
    let raw_err = ((kronrod - gauss) * half).abs();
    let fasc = fasc * half.abs();
    let mut err = raw_err;
    if fasc != 0.0 && raw_err != 0.0 {
        let scale = (200.0 * raw_err / fasc).powf(1.5);
        err = if scale < 1.0 { fasc * scale } else { fasc };
    }
    let round = 50.0 * f64::EPSILON * fabs * half.abs();
    (kronrod * half, err.max(round))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Adaptive integration of `f` over the union of `[pts[i], pts[i+1]]`.
pub fn adaptive_breakpoints<F: Fn(f64) -> f64>(f: &F, pts: &[f64], cfg: &QuadConfig) -> QuadOutcome {
    assert!(pts.len() >= 2, "need at least one interval");
    let mut panels: Vec<Panel> = Vec::with_capacity(cfg.max_panels);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            panels.push(Panel {
                a: w[0],
                b: w[1],
                value: v,
                error: e,
            });
        }
    }
    if panels.is_empty() {
        return QuadOutcome {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let goal = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= goal {
            return QuadOutcome {
                value: total,
                error: err,
                converged: true,
            };
        }
        if panels.len() >= cfg.max_panels {
            return QuadOutcome {
                value: total,
                error: err,
                converged: false,
            };
        }
        // Split the worst panel.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .unwrap();
        let p = panels[idx];
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // Interval no longer splittable in f64; freeze its estimate.
            panels[idx].error = 0.0;
            continue;
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        panels[idx] = Panel {
            a: p.a,
            b: mid,
            value: v1,
            error: e1,
        };
        panels.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            error: e2,
        });
    }
}

/// Adaptive integration over [a, b], error-checked.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let out = adaptive_breakpoints(&f, &[a, b], cfg);
    finish(out)
}

/// As `integrate` but with interior breakpoints to seed the subdivision.
pub fn integrate_segmented<F: Fn(f64) -> f64>(f: F, pts: &[f64], cfg: &QuadConfig) -> Result<f64> {
    let out = adaptive_breakpoints(&f, pts, cfg);
    finish(out)
}

fn finish(out: QuadOutcome) -> Result<f64> {
    if out.converged {
        Ok(out.value)
    } else if out.value.abs() > 1e12 || !out.value.is_finite() {
        Err(Error::Divergent {
            estimate: out.value,
        })
    } else {
        Err(Error::QuadratureNonConvergent {
            estimate: out.value,
            error: out.error,
        })
    }
}

/// Integrate `f` over (0, 1) where `f` may have integrable singularities at
/// either endpoint. Each half is mapped by a quadratic substitution
/// (`z = s^2` at the left end, `z = 1 - s^2` at the right) which removes
/// singularities of order up to 1/2 and tames stronger but integrable ones.
pub fn integrate_unit_singular<F: Fn(f64) -> f64>(f: F, cfg: &QuadConfig) -> Result<f64> {
    let half = 0.5f64.sqrt();
    let left = adaptive_breakpoints(
        &|s: f64| 2.0 * s * f(s * s),
        &[0.0, half * 0.25, half * 0.5, half],
        cfg,
    );
    let right = adaptive_breakpoints(
        &|s: f64| 2.0 * s * f(1.0 - s * s),
        &[0.0, half * 0.25, half * 0.5, half],
        cfg,
    );
    finish(QuadOutcome {
        value: left.value + right.value,
        error: left.error + right.error,
        converged: left.converged && right.converged,
    })
}
