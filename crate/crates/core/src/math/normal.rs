//! Standard normal distribution primitives.
//!
//! Everything downstream (kernel quantiles, partial moments, distortion
//! branches, replication integrands) routes through these three functions,
//! so they are implemented here once with full double precision rather than
//! pulled from a stats crate: `erfc` uses Cody's rational approximations
//! (absolute error below 1e-15 over the whole range) and the inverse CDF
//! uses a rational initial guess polished by Halley steps.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Density of the standard normal distribution.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt()
}

/// Distribution function of the standard normal, accurate into the far tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > x)`; avoids cancellation for large positive `x`.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

// Cody's coefficients for erf on |x| <= 0.46875.
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];

// Cody's coefficients for erfc on 0.46875 < x <= 4.
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];

// Cody's coefficients for erfc on x > 4.
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

const ONE_OVER_SQRT_PI: f64 = 0.5641895835477562869;

/// Complementary error function, Cody's algorithm.
pub fn erfc(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let val = if ax <= 4.0 {
        let mut num = ERF_C[8] * ax;
        let mut den = ax;
        for i in 0..7 {
            num = (num + ERF_C[i]) * ax;
            den = (den + ERF_D[i]) * ax;
        }
        ((num + ERF_C[7]) / (den + ERF_D[7])) * exp_neg_sq(ax)
    } else if ax < 26.7 {
        let inv2 = 1.0 / (ax * ax);
        let mut num = ERF_P[5] * inv2;
        let mut den = inv2;
        for i in 0..4 {
            num = (num + ERF_P[i]) * inv2;
            den = (den + ERF_Q[i]) * inv2;
        }
        let r = inv2 * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (exp_neg_sq(ax) / ax) * (ONE_OVER_SQRT_PI - r)
    } else if ax < 37.6 {
        // Deep tail: the rational correction underflows; the asymptotic
        // leading term is still representable down to ~1e-300.
        (exp_neg_sq(ax) / ax) * ONE_OVER_SQRT_PI * asymptotic_series(ax)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - val
    } else {
        val
    }
}

fn erf_small(x: f64) -> f64 {
    let z = x * x;
    let mut num = ERF_A[4] * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + ERF_A[i]) * z;
        den = (den + ERF_B[i]) * z;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// exp(-x^2) evaluated with the split trick to keep the argument exact.
#[inline]
fn exp_neg_sq(ax: f64) -> f64 {
    let xh = (ax * 16.0).trunc() / 16.0;
    let del = (ax - xh) * (ax + xh);
    (-xh * xh).exp() * (-del).exp()
}

/// First terms of the asymptotic expansion of erfc(x)*x*exp(x^2)*sqrt(pi).
fn asymptotic_series(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=6 {
        term *= -(2.0 * k as f64 - 1.0) / 2.0 * inv2;
        sum += term;
    }
    sum
}

// Rational approximation coefficients for the inverse normal CDF
// (Acklam's method), refined below to full precision.
const INV_A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const INV_B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const INV_C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const INV_D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];

/// Inverse of `norm_cdf` on (0, 1).
///
/// The rational initial guess is accurate to ~1e-9; two Halley iterations
/// against `norm_cdf` bring it to within a few ulps, which comfortably meets
/// the 1e-12 round-trip contract used by the kernel quantile.
pub fn norm_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "norm_quantile requires p in (0,1)");
    let x0 = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    } else if p <= 0.97575 {
        let q = p - 0.5;
        let r = q * q;
        (((((INV_A[0] * r + INV_A[1]) * r + INV_A[2]) * r + INV_A[3]) * r + INV_A[4]) * r
            + INV_A[5])
            * q
            / (((((INV_B[0] * r + INV_B[1]) * r + INV_B[2]) * r + INV_B[3]) * r + INV_B[4]) * r
                + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((INV_C[0] * q + INV_C[1]) * q + INV_C[2]) * q + INV_C[3]) * q + INV_C[4]) * q
            + INV_C[5])
            / ((((INV_D[0] * q + INV_D[1]) * q + INV_D[2]) * q + INV_D[3]) * q + 1.0)
    };
    let mut x = x0;
    for _ in 0..2 {
        // Halley step on F(x) - p = 0; in the tails work with the smaller
        // of the two tail probabilities to avoid cancellation.
        let (err, dens) = if x < 0.0 {
            (norm_cdf(x) - p, norm_pdf(x))
        } else {
            ((1.0 - p) - norm_sf(x), norm_pdf(x))
        };
        if dens == 0.0 {
            break;
        }
        let u = err / dens;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// `ln Phi(x)` without underflow for very negative `x`.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        let c = norm_cdf(x);
        if c > 0.0 {
            return c.ln();
        }
    }
    // Asymptotic: Phi(x) ~ pdf(-x)/(-x) * series for x -> -inf.
    let ax = -x;
    -(ax * ax) / 2.0 - ax.ln() - 0.5 * (2.0 * PI).ln() + asymptotic_series(ax).ln()
}

/// Draws the pair needed for lognormal partial moments:
/// `Phi((t - shift)/1)` style arguments are assembled by callers; this module
/// deliberately exposes only the scalar primitives.
#[inline]
pub fn sqrt_2() -> f64 {
    SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 40-digit arithmetic.
    const CDF_REF: [(f64, f64); 17] = [
        (-37.0, 5.725571222524576823e-300),
        (-20.0, 2.753624118606233695e-89),
        (-12.5, 3.732564298877713377e-36),
        (-8.0, 6.220960574271784124e-16),
        (-5.612, 1.000007191783612401e-8),
        (-3.0, 0.001349898031630094527),
        (-1.0, 0.1586552539314570514),
        (-0.3, 0.3820885778110473627),
        (0.0, 0.5),
        (0.2, 0.5792597094391030230),
        (0.46875, 0.6803758284828823740),
        (1.0, 0.8413447460685429486),
        (2.5, 0.9937903346742238648),
        (4.0, 0.9999683287581668801),
        (6.0, 0.9999999990134123550),
        (8.5, 0.9999999999999999905),
        (15.0, 1.0),
    ];

    const QUANTILE_REF: [(f64, f64); 11] = [
        (1.0e-16, -8.222082216130435613),
        (1.0e-10, -6.361340902404056205),
        (1.0e-6, -4.753424308822898948),
        (0.0001, -3.719016485455680564),
        (0.025, -1.959963984540054236),
        (0.3, -0.524400512708040784),
        (0.5, 0.0),
        (0.8, 0.8416212335729142052),
        (0.975, 1.959963984540054236),
        (0.999999, 4.753424308822898948),
        (0.9999999999, 6.361340902404056205),
    ];

    #[test]
    fn cdf_matches_reference() {
        for &(x, want) in &CDF_REF {
            let got = norm_cdf(x);
            let tol = 1e-15 * want.abs().max(1e-15);
            assert!(
                (got - want).abs() <= tol.max(3e-16 * want.abs()),
                "Phi({x}) = {got:e}, want {want:e}"
            );
        }
    }

    #[test]
    fn quantile_matches_reference() {
        for &(p, want) in &QUANTILE_REF {
            let got = norm_quantile(p);
            if want == 0.0 {
                assert!(got.abs() < 1e-15);
            } else {
                assert!(
                    ((got - want) / want).abs() < 1e-13,
                    "quantile({p}) = {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn cdf_quantile_round_trip() {
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let x = norm_quantile(p);
            assert!((norm_cdf(x) - p).abs() / p < 1e-13);
        }
    }

    #[test]
    fn sf_complements_cdf() {
        for x in [-6.0, -1.2, 0.0, 0.7, 3.3, 9.0] {
            assert!((norm_sf(x) - norm_cdf(-x)).abs() <= 1e-16 + 1e-15 * norm_sf(x));
        }
    }

    #[test]
    fn log_cdf_tracks_cdf() {
        for x in [-40.0, -35.0, -12.0, -3.0, -0.5] {
            let l = log_norm_cdf(x);
            if x > -35.0 {
                assert!((l - norm_cdf(x).ln()).abs() < 1e-10, "x={x}");
            } else {
                assert!(l.is_finite() && l < -600.0);
            }
        }
    }
}
