//! S-shaped utilities and probability distortions, plus the audit machinery
//! that checks the standing assumptions they must satisfy before the solvers
//! are allowed to run.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::PricingKernel;
use crate::math::normal::{log_norm_cdf, norm_cdf, norm_quantile, norm_sf};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Handles for a user-supplied utility pair. All functions map R+ to R+.
#[derive(Clone)]
pub struct GenericUtility {
    pub gain: ScalarFn,
    pub loss: ScalarFn,
    pub gain_deriv: ScalarFn,
    pub gain_deriv_inv: ScalarFn,
    /// Second derivative of the gain utility; finite differences are used
    /// when absent.
    pub gain_second: Option<ScalarFn>,
}

impl fmt::Debug for GenericUtility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GenericUtility {..}")
    }
}

/// Utility on gains and losses, both measured from the reference point.
#[derive(Debug, Clone)]
pub enum SShapedUtility {
    /// `u_+(x) = x^alpha`, `u_-(x) = k_- x^alpha`.
    TwoPieceCrra { alpha: f64, k_minus: f64 },
    Generic(GenericUtility),
}

impl SShapedUtility {
    pub fn two_piece_crra(alpha: f64, k_minus: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Model(format!(
                "curvature must lie in (0,1), got {alpha}"
            )));
        }
        if !(k_minus > 0.0) {
            return Err(Error::Model(format!(
                "loss-aversion coefficient must be positive, got {k_minus}"
            )));
        }
        Ok(SShapedUtility::TwoPieceCrra { alpha, k_minus })
    }

    /// `(alpha, k_minus)` when the utility is two-piece CRRA.
    pub fn crra(&self) -> Option<(f64, f64)> {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, k_minus } => Some((*alpha, *k_minus)),
            SShapedUtility::Generic(_) => None,
        }
    }

    pub fn gain(&self, x: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, .. } => x.powf(*alpha),
            SShapedUtility::Generic(g) => (g.gain)(x),
        }
    }

    pub fn loss(&self, x: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, k_minus } => k_minus * x.powf(*alpha),
            SShapedUtility::Generic(g) => (g.loss)(x),
        }
    }

    pub fn gain_deriv(&self, x: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, .. } => alpha * x.powf(alpha - 1.0),
            SShapedUtility::Generic(g) => (g.gain_deriv)(x),
        }
    }

    /// Inverse marginal gain utility `(u_+')^{-1}`.
    pub fn gain_deriv_inv(&self, y: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, .. } => {
                (y / alpha).powf(1.0 / (alpha - 1.0))
            }
            SShapedUtility::Generic(g) => (g.gain_deriv_inv)(y),
        }
    }

    pub fn gain_second(&self, x: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, .. } => {
                alpha * (alpha - 1.0) * x.powf(alpha - 2.0)
            }
            SShapedUtility::Generic(g) => match &g.gain_second {
                Some(f) => f(x),
                None => {
                    let h = x * 1e-5;
                    ((g.gain_deriv)(x + h) - (g.gain_deriv)(x - h)) / (2.0 * h)
                }
            },
        }
    }

    /// Arrow-Pratt relative risk aversion `-x u_+''(x)/u_+'(x)`.
    pub fn relative_risk_aversion(&self, x: f64) -> f64 {
        match self {
            SShapedUtility::TwoPieceCrra { alpha, .. } => 1.0 - alpha,
            _ => -x * self.gain_second(x) / self.gain_deriv(x),
        }
    }

    /// Whether the loss utility is strictly concave at 0 (the corner
    /// characterization of the loss problem needs this).
    pub fn loss_strictly_concave_at_zero(&self) -> bool {
        match self {
            SShapedUtility::TwoPieceCrra { .. } => true,
            SShapedUtility::Generic(_) => {
                let mut ok = true;
                for h in [1e-6, 1e-4, 1e-2] {
                    let r1 = self.loss(h) / h;
                    let r2 = self.loss(2.0 * h) / (2.0 * h);
                    if !(r1 > r2 * (1.0 + 1e-9)) {
                        ok = false;
                    }
                }
                ok
            }
        }
    }
}

/// Probability weighting `T : [0,1] -> [0,1]`.
#[derive(Debug, Clone)]
pub enum Distortion {
    /// No weighting; reduces Choquet values to plain expectations.
    Identity,
    /// The lognormal-matched reversed-S family with piecewise-constant
    /// elasticity profile `j = a` below the breakpoint and `j = b` above it.
    ConstructedReversedS(ConstructedReversedS),
    /// `T(p) = p^e` on [0, 1/2], extended linearly to (1, 1). Steeply
    /// overweights small probabilities; the kink at 1/2 is deliberate.
    PowerThenLinear { exponent: f64 },
    /// Monotone cubic interpolation of a table of (p, T(p)) knots.
    Tabulated(MonotoneTable),
}

/// Parameters of the constructed reversed-S distortion. The family is tied
/// to the lognormal kernel it was built against (`mu`, `sd` below).
#[derive(Debug, Clone, Copy)]
pub struct ConstructedReversedS {
    pub c0: f64,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub sd: f64,
    /// Normalization making T(1) = 1.
    pub kappa: f64,
    /// Normal score of the breakpoint, `(ln c0 - mu)/sd`.
    w0: f64,
}

impl ConstructedReversedS {
    fn head_scale(&self) -> f64 {
        // e^{a mu + a^2 sd^2 / 2}
        (self.a * self.mu + self.a * self.a * self.sd * self.sd / 2.0).exp()
    }

    fn tail_scale(&self) -> f64 {
        (self.b * self.mu + self.b * self.b * self.sd * self.sd / 2.0).exp()
    }

    /// T evaluated at the probability whose normal score is `w`.
    fn value_at_score(&self, w: f64) -> f64 {
        let ConstructedReversedS {
            c0, a, b, sd, kappa, w0, ..
        } = *self;
        if w <= w0 {
            kappa * self.head_scale() * norm_cdf(w - a * sd)
        } else {
            let head = kappa * self.head_scale() * norm_cdf(w0 - a * sd);
            let tail = kappa
                * c0.powf(a - b)
                * self.tail_scale()
                * (norm_cdf(w - b * sd) - norm_cdf(w0 - b * sd));
            head + tail
        }
    }

    /// ln T'(z) at score w, where T'(z) = kappa x^a (x <= c0) or
    /// kappa c0^{a-b} x^b (x > c0) with x the matched-kernel quantile.
    fn log_deriv_at_score(&self, w: f64) -> f64 {
        let lnx = self.mu + self.sd * w;
        if w <= self.w0 {
            self.kappa.ln() + self.a * lnx
        } else {
            self.kappa.ln() + (self.a - self.b) * self.c0.ln() + self.b * lnx
        }
    }
}

/// Strictly increasing table with monotone cubic (Fritsch-Carlson) tangents.
#[derive(Debug, Clone)]
pub struct MonotoneTable {
    ps: Vec<f64>,
    vs: Vec<f64>,
    tangents: Vec<f64>,
}

impl MonotoneTable {
    /// Accepts any table with strictly increasing abscissae; value
    /// monotonicity is checked by `validate_distortion`, not here, so that
    /// defective tables can be audited rather than rejected unseen.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Model("table needs at least two knots".into()));
        }
        let ps: Vec<f64> = points.iter().map(|p| p.0).collect();
        let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
        if ps.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Model("table abscissae must strictly increase".into()));
        }
        if ps[0] != 0.0 || *ps.last().unwrap() != 1.0 {
            return Err(Error::Model("table must span [0, 1]".into()));
        }
        if vs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model("table values must be finite".into()));
        }
        let n = ps.len();
        let mut slopes = vec![0.0; n - 1];
        for i in 0..n - 1 {
            slopes[i] = (vs[i + 1] - vs[i]) / (ps[i + 1] - ps[i]);
        }
        let mut tangents = vec![0.0; n];
        tangents[0] = slopes[0].max(0.0);
        tangents[n - 1] = slopes[n - 2].max(0.0);
        for i in 1..n - 1 {
            tangents[i] = if slopes[i - 1] * slopes[i] > 0.0 {
                // Harmonic mean keeps the interpolant monotone.
                2.0 / (1.0 / slopes[i - 1] + 1.0 / slopes[i])
            } else {
                0.0
            };
        }
        // Fritsch-Carlson limiter.
        for i in 0..n - 1 {
            if slopes[i] == 0.0 {
                tangents[i] = 0.0;
                tangents[i + 1] = 0.0;
            } else {
                let a = tangents[i] / slopes[i];
                let bq = tangents[i + 1] / slopes[i];
                let s = (a * a + bq * bq).sqrt();
                if s > 3.0 {
                    tangents[i] = 3.0 * slopes[i] * a / s;
                    tangents[i + 1] = 3.0 * slopes[i] * bq / s;
                }
            }
        }
        Ok(MonotoneTable { ps, vs, tangents })
    }

    fn segment(&self, p: f64) -> usize {
        match self.ps.binary_search_by(|x| x.partial_cmp(&p).unwrap()) {
            Ok(i) => i.min(self.ps.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.ps.len() - 2),
        }
    }

    pub fn eval(&self, p: f64) -> f64 {
        let i = self.segment(p);
        let h = self.ps[i + 1] - self.ps[i];
        let t = ((p - self.ps[i]) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(t);
        h00 * self.vs[i] + h10 * h * self.tangents[i] + h01 * self.vs[i + 1]
            + h11 * h * self.tangents[i + 1]
    }

    pub fn deriv(&self, p: f64) -> f64 {
        let i = self.segment(p);
        let h = self.ps[i + 1] - self.ps[i];
        let t = ((p - self.ps[i]) / h).clamp(0.0, 1.0);
        let dh00 = (6.0 * t - 6.0) * t;
        let dh10 = (3.0 * t - 4.0) * t + 1.0;
        let dh01 = (6.0 - 6.0 * t) * t;
        let dh11 = (3.0 * t - 2.0) * t;
        dh00 * self.vs[i] / h + dh10 * self.tangents[i] + dh01 * self.vs[i + 1] / h
            + dh11 * self.tangents[i + 1]
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.ps.iter().copied().zip(self.vs.iter().copied())
    }
}

fn hermite_basis(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + t,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

impl Distortion {
    /// `T(z)`, with the conventions T(z<=0) = 0 and T(z>=1) = 1.
    pub fn value(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        if z >= 1.0 {
            return 1.0;
        }
        match self {
            Distortion::Identity => z,
            Distortion::ConstructedReversedS(c) => c.value_at_score(norm_quantile(z)),
            Distortion::PowerThenLinear { exponent } => {
                if z <= 0.5 {
                    z.powf(*exponent)
                } else {
                    let v0 = 0.5f64.powf(*exponent);
                    v0 + 2.0 * (1.0 - v0) * (z - 0.5)
                }
            }
            Distortion::Tabulated(t) => t.eval(z),
        }
    }

    /// `T'(z)` for z in (0, 1). May legitimately diverge at the endpoints.
    pub fn deriv(&self, z: f64) -> f64 {
        match self {
            Distortion::Identity => 1.0,
            Distortion::ConstructedReversedS(c) => {
                c.log_deriv_at_score(norm_quantile(z)).exp()
            }
            Distortion::PowerThenLinear { exponent } => {
                if z <= 0.5 {
                    exponent * z.powf(exponent - 1.0)
                } else {
                    2.0 * (1.0 - 0.5f64.powf(*exponent))
                }
            }
            Distortion::Tabulated(t) => t.deriv(z),
        }
    }

    /// `ln T'(F(rho))` where `F` is the cdf of `kernel`, evaluated through
    /// closed forms where they exist so deep-tail scores never round through
    /// a probability of 0 or 1.
    pub fn log_deriv_at_cdf(&self, kernel: &PricingKernel, rho: f64) -> f64 {
        let w = kernel.score(rho);
        match self {
            Distortion::Identity => 0.0,
            Distortion::ConstructedReversedS(c) => {
                // Map the evaluation kernel's score onto the family's own.
                let w_own = (kernel.mu() + kernel.sd() * w - c.mu) / c.sd;
                c.log_deriv_at_score(w_own)
            }
            Distortion::PowerThenLinear { exponent } => {
                if w <= 0.0 || norm_cdf(w) <= 0.5 {
                    exponent.ln() + (exponent - 1.0) * log_norm_cdf(w)
                } else {
                    (2.0 * (1.0 - 0.5f64.powf(*exponent))).ln()
                }
            }
            Distortion::Tabulated(t) => t.deriv(norm_cdf(w).clamp(1e-12, 1.0 - 1e-12)).ln(),
        }
    }

    /// `T'(F(rho))`.
    pub fn deriv_at_cdf(&self, kernel: &PricingKernel, rho: f64) -> f64 {
        self.log_deriv_at_cdf(kernel, rho).exp()
    }

    /// The elasticity profile `j(x)` in closed form, when available for this
    /// variant over this kernel.
    fn j_closed(&self, kernel: &PricingKernel, x: f64) -> Option<f64> {
        match self {
            Distortion::Identity => Some(0.0),
            Distortion::ConstructedReversedS(c)
                if (c.mu - kernel.mu()).abs() < 1e-12 && (c.sd - kernel.sd()).abs() < 1e-12 =>
            {
                Some(if x <= c.c0 { c.a } else { c.b })
            }
            _ => None,
        }
    }
}

/// Build the reversed-S distortion of the lognormal family over `kernel`,
/// normalized so that T(1) = 1.
pub fn build_reversed_s(kernel: &PricingKernel, c0: f64, a: f64, b: f64) -> Result<Distortion> {
    if !(c0 > 0.0) {
        return Err(Error::Domain(format!("breakpoint must be positive, got {c0}")));
    }
    if !(a < 0.0) {
        return Err(Error::Domain(format!("head elasticity must be negative, got {a}")));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!(
            "tail elasticity must lie in (0,1), got {b}"
        )));
    }
    let (mu, sd) = (kernel.mu(), kernel.sd());
    let w0 = (c0.ln() - mu) / sd;
    let head = (a * mu + a * a * sd * sd / 2.0).exp() * norm_cdf(w0 - a * sd);
    let tail = c0.powf(a - b) * (b * mu + b * b * sd * sd / 2.0).exp() * norm_sf(w0 - b * sd);
    let kappa = 1.0 / (head + tail);
    assert!(kappa > 0.0, "normalization must be positive by construction");
    Ok(Distortion::ConstructedReversedS(ConstructedReversedS {
        c0,
        a,
        b,
        mu,
        sd,
        kappa,
        w0,
    }))
}

/// Single named check inside a validation report.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn pass(name: &'static str, detail: String) -> Self {
        Check {
            name,
            passed: true,
            detail,
        }
    }
    fn fail(name: &'static str, detail: String) -> Self {
        Check {
            name,
            passed: false,
            detail,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:>4}  {:<28} {}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Audit a utility pair on a strictly increasing grid of at least 16 points.
pub fn validate_utility(u: &SShapedUtility, grid: &[f64]) -> Result<ValidationReport> {
    if grid.len() < 16 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] <= 0.0 {
        return Err(Error::Domain(
            "validation grid must be strictly increasing, positive, with >= 16 points".into(),
        ));
    }
    let mut checks = Vec::new();

    let g0 = u.gain(0.0);
    let l0 = u.loss(0.0);
    checks.push(if g0 == 0.0 && l0 == 0.0 {
        Check::pass("zero_at_reference", "u(0) = 0 on both sides".into())
    } else {
        Check::fail(
            "zero_at_reference",
            format!("u_+(0) = {g0}, u_-(0) = {l0}"),
        )
    });

    let gains: Vec<f64> = grid.iter().map(|&x| u.gain(x)).collect();
    let losses: Vec<f64> = grid.iter().map(|&x| u.loss(x)).collect();
    let mono = |v: &[f64]| v.windows(2).position(|w| !(w[1] > w[0]));
    checks.push(match (mono(&gains), mono(&losses)) {
        (None, None) => Check::pass("strictly_increasing", "both sides".into()),
        (i, j) => Check::fail(
            "strictly_increasing",
            format!("first violation at grid index gain {i:?} / loss {j:?}"),
        ),
    });

    // Concavity via divided-difference slopes (works on uneven grids).
    let concave = |v: &[f64]| -> Option<usize> {
        let mut prev = f64::INFINITY;
        for i in 0..v.len() - 1 {
            let s = (v[i + 1] - v[i]) / (grid[i + 1] - grid[i]);
            if s > prev * (1.0 + 1e-12) + 1e-300 {
                return Some(i);
            }
            prev = s;
        }
        None
    };
    checks.push(match (concave(&gains), concave(&losses)) {
        (None, None) => Check::pass("concave", "slopes nonincreasing on both sides".into()),
        (i, j) => Check::fail(
            "concave",
            format!("slope increases at gain {i:?} / loss {j:?}"),
        ),
    });

    // Strict concavity of the gain side.
    let strict = {
        let mut ok = true;
        let mut prev = f64::INFINITY;
        for i in 0..gains.len() - 1 {
            let s = (gains[i + 1] - gains[i]) / (grid[i + 1] - grid[i]);
            if !(s < prev) {
                ok = false;
                break;
            }
            prev = s;
        }
        ok
    };
    checks.push(if strict {
        Check::pass("gain_strictly_concave", "slopes strictly decreasing".into())
    } else {
        Check::fail("gain_strictly_concave", "gain slopes not strictly decreasing".into())
    });

    // Inada at 0: marginal utility must still be rising as x falls.
    let slope_small = log_log_slope(u, grid[0], grid[1]);
    checks.push(if slope_small < -1e-3 {
        Check::pass(
            "inada_at_zero",
            format!("d ln u'/d ln x = {slope_small:.3e} at small x"),
        )
    } else {
        Check::fail(
            "inada_at_zero",
            format!("marginal utility levels off near 0 (slope {slope_small:.3e})"),
        )
    });

    // Inada at infinity: marginal utility decaying to 0.
    let n = grid.len();
    let slope_large = log_log_slope(u, grid[n - 2], grid[n - 1]);
    checks.push(if slope_large < -1e-3 {
        Check::pass(
            "inada_at_infinity",
            format!("d ln u'/d ln x = {slope_large:.3e} at large x"),
        )
    } else {
        Check::fail(
            "inada_at_infinity",
            format!("marginal utility not decaying (slope {slope_large:.3e})"),
        )
    });

    // liminf of relative risk aversion sampled at the largest grid points.
    let tail: Vec<f64> = grid[n.saturating_sub(3)..]
        .iter()
        .map(|&x| u.relative_risk_aversion(x))
        .collect();
    let min_rra = tail.iter().cloned().fold(f64::INFINITY, f64::min);
    checks.push(if min_rra > 1e-3 {
        Check::pass(
            "tail_risk_aversion_positive",
            format!("min sampled R_u = {min_rra:.6}"),
        )
    } else {
        Check::fail(
            "tail_risk_aversion_positive",
            format!("R_u sampled down to {min_rra:.3e} at the largest grid points"),
        )
    });

    Ok(ValidationReport { checks })
}

fn log_log_slope(u: &SShapedUtility, x1: f64, x2: f64) -> f64 {
    (u.gain_deriv(x2).ln() - u.gain_deriv(x1).ln()) / (x2.ln() - x1.ln())
}

/// Audit a distortion on a grid inside (0, 1).
pub fn validate_distortion(t: &Distortion, grid: &[f64]) -> Result<ValidationReport> {
    if grid.is_empty() || grid.iter().any(|&z| !(z > 0.0 && z < 1.0)) {
        return Err(Error::Domain("distortion grid must lie inside (0,1)".into()));
    }
    let mut checks = Vec::new();
    let at0 = t.value(0.0);
    let at1 = t.value(1.0);
    checks.push(if at0 == 0.0 {
        Check::pass("fixes_zero", "T(0) = 0".into())
    } else {
        Check::fail("fixes_zero", format!("T(0) = {at0}"))
    });
    checks.push(if (at1 - 1.0).abs() <= 1e-12 {
        Check::pass("fixes_one", "T(1) = 1".into())
    } else {
        Check::fail("fixes_one", format!("T(1) = {at1}"))
    });

    let vals: Vec<f64> = grid.iter().map(|&z| t.value(z)).collect();
    match vals.windows(2).position(|w| !(w[1] > w[0])) {
        None => checks.push(Check::pass("strictly_increasing", "on grid".into())),
        Some(i) => checks.push(Check::fail(
            "strictly_increasing",
            format!(
                "violation at grid index {i}: T({:.6}) = {:.6e} !< T({:.6}) = {:.6e}",
                grid[i],
                vals[i],
                grid[i + 1],
                vals[i + 1]
            ),
        )),
    }

    let bad_deriv = grid
        .iter()
        .position(|&z| !(t.deriv(z).is_finite() && t.deriv(z) > 0.0));
    checks.push(match bad_deriv {
        None => Check::pass("derivative_positive_finite", "on interior grid".into()),
        Some(i) => Check::fail(
            "derivative_positive_finite",
            format!("T'({:.6}) = {:.3e}", grid[i], t.deriv(grid[i])),
        ),
    });

    Ok(ValidationReport { checks })
}

/// Result of the quantile-to-weight monotonicity test on
/// `z -> F^{-1}(z)/T'(z)`.
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub holds: bool,
    /// `(z_left, z_right, ratio_left, ratio_right)` of the first violation.
    pub first_violation: Option<(f64, f64, f64, f64)>,
}

/// Check that `F^{-1}(z)/T_+'(z)` is non-decreasing, on a score-uniform grid
/// (which clusters probability points near 0 and 1).
pub fn monotonicity_check(
    kernel: &PricingKernel,
    t_plus: &Distortion,
    n: usize,
) -> Result<MonotonicityReport> {
    if n < 100 {
        return Err(Error::Domain("monotonicity grid needs n >= 100".into()));
    }
    let w_lo = norm_quantile(1e-7);
    let w_hi = -w_lo;
    let mut prev_log: Option<(f64, f64)> = None;
    for i in 0..n {
        let w = w_lo + (w_hi - w_lo) * i as f64 / (n - 1) as f64;
        let rho = kernel.from_score(w);
        // ln [F^{-1}(z)/T'(z)] at z = F(rho)
        let log_ratio = rho.ln() - t_plus.log_deriv_at_cdf(kernel, rho);
        if let Some((pw, plog)) = prev_log {
            if log_ratio < plog - 1e-10 {
                return Ok(MonotonicityReport {
                    holds: false,
                    first_violation: Some((
                        norm_cdf(pw),
                        norm_cdf(w),
                        plog.exp(),
                        log_ratio.exp(),
                    )),
                });
            }
        }
        prev_log = Some((w, log_ratio));
    }
    Ok(MonotonicityReport {
        holds: true,
        first_violation: None,
    })
}

/// Elasticity `j(x) = x H''(x)/H'(x) - x F''(x)/F'(x)` of the distorted
/// distribution `H = T o F`; closed form when available, otherwise central
/// differences of `ln T'(F(x))` with step `h = x * 1e-4`.
pub fn j_function(kernel: &PricingKernel, t_plus: &Distortion, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("j requires x > 0, got {x}")));
    }
    if let Some(j) = t_plus.j_closed(kernel, x) {
        return Ok(j);
    }
    let h = x * 1e-4;
    let up = t_plus.log_deriv_at_cdf(kernel, x + h);
    let down = t_plus.log_deriv_at_cdf(kernel, x - h);
    let j = x * (up - down) / (2.0 * h);
    if j.is_finite() {
        Ok(j)
    } else {
        Err(Error::Evaluation(format!(
            "distortion derivative not finite near x = {x}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::quad::{integrate_unit_singular, QuadConfig};

    fn kernel() -> PricingKernel {
        PricingKernel::new(-0.07, 0.2).unwrap()
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn crra_validates_and_rra_is_exact() {
        let u = SShapedUtility::two_piece_crra(0.88, 2.25).unwrap();
        let grid = log_grid(1e-6, 1e6, 64);
        let rep = validate_utility(&u, &grid).unwrap();
        assert!(rep.all_passed(), "{rep}");
        for x in [1e-6, 0.5, 3.0, 1e6] {
            assert!((u.relative_risk_aversion(x) - 0.12).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_utility_fails_strict_concavity() {
        let lin: ScalarFn = Arc::new(|x: f64| x);
        let u = SShapedUtility::Generic(GenericUtility {
            gain: lin.clone(),
            loss: lin.clone(),
            gain_deriv: Arc::new(|_| 1.0),
            gain_deriv_inv: Arc::new(|_| f64::NAN),
            gain_second: Some(Arc::new(|_| 0.0)),
        });
        let rep = validate_utility(&u, &log_grid(1e-6, 1e6, 64)).unwrap();
        assert!(!rep.check("gain_strictly_concave").unwrap().passed);
        assert!(!rep.check("inada_at_zero").unwrap().passed);
    }

    #[test]
    fn log1p_utility_report() {
        // u(x) = ln(1+x): monotone and concave; fails Inada at 0 (finite
        // marginal utility); its relative risk aversion x/(1+x) tends to 1,
        // so the tail R_u check passes.
        let u = SShapedUtility::Generic(GenericUtility {
            gain: Arc::new(|x: f64| x.ln_1p()),
            loss: Arc::new(|x: f64| x.ln_1p()),
            gain_deriv: Arc::new(|x: f64| 1.0 / (1.0 + x)),
            gain_deriv_inv: Arc::new(|y: f64| 1.0 / y - 1.0),
            gain_second: None,
        });
        let rep = validate_utility(&u, &log_grid(1e-6, 1e6, 64)).unwrap();
        assert!(rep.check("strictly_increasing").unwrap().passed);
        assert!(rep.check("concave").unwrap().passed);
        assert!(!rep.check("inada_at_zero").unwrap().passed);
        assert!(rep.check("tail_risk_aversion_positive").unwrap().passed);
        for x in [1e2, 1e4, 1e6] {
            let want = x / (1.0 + x);
            assert!(
                (u.relative_risk_aversion(x) - want).abs() < 1e-3,
                "finite-difference R_u at {x}"
            );
        }
    }

    #[test]
    fn crra_marginal_inverse_round_trip() {
        let u = SShapedUtility::two_piece_crra(0.88, 2.25).unwrap();
        let mut x = 1e-6;
        while x <= 1e6 {
            let y = u.gain_deriv(x);
            let back = u.gain_deriv_inv(y);
            assert!(((back - x) / x).abs() < 1e-12, "x = {x}");
            x *= 10.0;
        }
    }

    #[test]
    fn identity_distortion_validates() {
        let grid: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
        let rep = validate_distortion(&Distortion::Identity, &grid).unwrap();
        assert!(rep.all_passed());
    }

    #[test]
    fn constructed_distortion_shape() {
        let k = kernel();
        let t = build_reversed_s(&k, 1.0, -0.5, 0.5).unwrap();
        let grid: Vec<f64> = (1..500).map(|i| i as f64 / 500.0).collect();
        let rep = validate_distortion(&t, &grid).unwrap();
        assert!(rep.all_passed(), "{rep}");
        // Steep at both ends.
        assert!(t.deriv(1e-6) > 1e1);
        assert!(t.deriv(1.0 - 1e-6) > 1e1);
        // Normalization: frozen from an independent closed-form evaluation.
        if let Distortion::ConstructedReversedS(c) = &t {
            assert!((c.kappa - 0.9169513506853153).abs() < 1e-12);
        } else {
            panic!("wrong variant");
        }
        // T(1) = 1 exactly after normalization.
        let z0 = k.cdf(1.0).unwrap();
        assert!((t.value(1.0) - 1.0).abs() < 1e-15);
        // Branch continuity at the breakpoint.
        let left = t.value(z0 - 1e-13);
        let right = t.value(z0 + 1e-13);
        assert!((left - right).abs() < 1e-10);
    }

    #[test]
    fn constructed_distortion_integrates_to_one() {
        // int_0^1 T'(z) dz = 1: fundamental theorem, quadrature against the
        // closed-form derivative with endpoint singularities.
        let k = kernel();
        let t = build_reversed_s(&k, 1.0, -0.5, 0.5).unwrap();
        let cfg = QuadConfig::with_tol(1e-10);
        let v = integrate_unit_singular(|z| t.deriv(z), &cfg).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "got {v}");
    }

    #[test]
    fn j_profile_of_constructed_family() {
        let k = kernel();
        let t = build_reversed_s(&k, 1.0, -0.5, 0.5).unwrap();
        assert_eq!(j_function(&k, &t, 0.4).unwrap(), -0.5);
        assert_eq!(j_function(&k, &t, 1.0).unwrap(), -0.5);
        assert_eq!(j_function(&k, &t, 2.5).unwrap(), 0.5);
        assert_eq!(j_function(&k, &Distortion::Identity, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn j_finite_differences_agree_with_closed_form() {
        // Force the finite-difference path by evaluating the constructed
        // family over a different kernel, where d ln T'(F(x))/d ln x scales
        // by the sd ratio.
        let own = kernel();
        let other = PricingKernel::new(-0.03, 0.25).unwrap();
        let t = build_reversed_s(&own, 1.0, -0.5, 0.5).unwrap();
        for x in [0.2, 0.5, 0.9] {
            let j = j_function(&other, &t, x).unwrap();
            // x maps into the head branch of the family for these points.
            let want = -0.5 * other.sd() / own.sd();
            assert!((j - want).abs() < 1e-5, "x = {x}: {j} vs {want}");
        }
    }

    #[test]
    fn monotonicity_identity_and_constructed() {
        let k = kernel();
        assert!(monotonicity_check(&k, &Distortion::Identity, 512)
            .unwrap()
            .holds);
        let t = build_reversed_s(&k, 1.0, -0.5, 0.5).unwrap();
        assert!(monotonicity_check(&k, &t, 512).unwrap().holds);
        // The steep power branch passes monotonicity as well; its failure
        // mode is integrability, caught by the classifier instead.
        let q = Distortion::PowerThenLinear { exponent: 0.25 };
        assert!(monotonicity_check(&k, &q, 512).unwrap().holds);
    }

    #[test]
    fn tabulated_non_monotone_flagged_with_index() {
        let t = Distortion::Tabulated(
            MonotoneTable::new(&[(0.0, 0.0), (0.3, 0.5), (0.6, 0.4), (1.0, 1.0)]).unwrap(),
        );
        let grid: Vec<f64> = (1..100).map(|i| i as f64 / 100.0).collect();
        let rep = validate_distortion(&t, &grid).unwrap();
        let mono = rep.check("strictly_increasing").unwrap();
        assert!(!mono.passed);
        assert!(mono.detail.contains("index"));
    }

    #[test]
    fn tabulated_monotone_tracks_identity() {
        let pts: Vec<(f64, f64)> = (0..=20).map(|i| (i as f64 / 20.0, i as f64 / 20.0)).collect();
        let t = Distortion::Tabulated(MonotoneTable::new(&pts).unwrap());
        for i in 1..40 {
            let z = i as f64 / 40.0;
            assert!((t.value(z) - z).abs() < 1e-12);
            assert!((t.deriv(z) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn build_rejects_out_of_range_parameters() {
        let k = kernel();
        assert!(build_reversed_s(&k, 0.0, -0.5, 0.5).is_err());
        assert!(build_reversed_s(&k, 1.0, 0.1, 0.5).is_err());
        assert!(build_reversed_s(&k, 1.0, -0.5, 1.1).is_err());
    }
}
