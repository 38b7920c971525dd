//! Choquet integrals (distorted expectations) in discrete and quantile form,
//! plus the comonotone arrangement operators used to bound products
//! `E[X rho]` over claims with a prescribed distribution.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::PricingKernel;
use crate::math::quad::{adaptive_breakpoints, QuadConfig, QuadOutcome};
use crate::preferences::Distortion;

/// A simple random variable as (value, probability) pairs.
#[derive(Debug, Clone)]
pub struct DiscreteClaim {
    outcomes: Vec<(f64, f64)>,
}

impl DiscreteClaim {
    pub fn new(outcomes: Vec<(f64, f64)>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::Domain("claim needs at least one outcome".into()));
        }
        if outcomes.iter().any(|&(v, p)| !v.is_finite() || !(p > 0.0)) {
            return Err(Error::Domain(
                "outcome values must be finite and probabilities positive".into(),
            ));
        }
        let total: f64 = outcomes.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteClaim { outcomes })
    }

    pub fn outcomes(&self) -> &[(f64, f64)] {
        &self.outcomes
    }
}

/// `int_0^inf T(P{u(X) > y}) dy` evaluated exactly as a finite sum over the
/// sorted distinct utility levels. Duplicate values are merged, so the result
/// is invariant under re-listing of outcomes.
pub fn choquet_value_discrete<U: Fn(f64) -> f64>(
    claim: &DiscreteClaim,
    u: U,
    t: &Distortion,
) -> Result<f64> {
    if let Some(&(v, _)) = claim.outcomes.iter().find(|&&(v, _)| v < 0.0) {
        return Err(Error::Domain(format!(
            "negative outcome {v}: split gains and losses before valuation"
        )));
    }
    let mut sorted: Vec<(f64, f64)> = claim.outcomes.clone();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut levels: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (v, p) in sorted {
        match levels.last_mut() {
            Some(last) if last.0 == v => last.1 += p,
            _ => levels.push((v, p)),
        }
    }
    // tail[i] = P(X >= levels[i])
    let mut value = 0.0;
    let mut tail: f64 = levels.iter().map(|&(_, p)| p).sum();
    let mut prev_u = u(0.0);
    for &(v, p) in &levels {
        if v > 0.0 {
            let uv = u(v);
            value += (uv - prev_u) * t.value(tail.min(1.0));
            prev_u = uv;
        }
        tail -= p;
    }
    Ok(value)
}

/// Interpolation rule for knot-based quantile functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Left-continuous step: `g(z) = g_i` on `(z_i, z_{i+1}]`.
    Step,
    /// Piecewise linear through the knots, flat beyond the last knot.
    Linear,
}

/// Non-decreasing left-continuous quantile function on [0, 1).
#[derive(Clone)]
pub enum QuantileFn {
    Knots {
        zs: Vec<f64>,
        gs: Vec<f64>,
        interp: Interp,
    },
    ClosedForm(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for QuantileFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuantileFn::Knots { zs, interp, .. } => {
                write!(f, "QuantileFn::Knots({} knots, {:?})", zs.len(), interp)
            }
            QuantileFn::ClosedForm(_) => write!(f, "QuantileFn::ClosedForm"),
        }
    }
}

impl QuantileFn {
    /// Knot constructor; requires `z_0 = 0 < z_1 < ... < z_n < 1`,
    /// nondecreasing nonnegative values, `g(0) = 0`.
    pub fn knots(zs: Vec<f64>, gs: Vec<f64>, interp: Interp) -> Result<Self> {
        if zs.len() != gs.len() || zs.is_empty() {
            return Err(Error::Domain("knot vectors must be equal-length, nonempty".into()));
        }
        if zs[0] != 0.0 || gs[0] != 0.0 {
            return Err(Error::Domain("quantile function must start at (0, 0)".into()));
        }
        if zs.windows(2).any(|w| !(w[1] > w[0])) || *zs.last().unwrap() >= 1.0 {
            return Err(Error::Domain("knot abscissae must strictly increase within [0,1)".into()));
        }
        if gs.windows(2).any(|w| w[1] < w[0]) || gs.iter().any(|&g| g < 0.0) {
            return Err(Error::Domain("quantile values must be nonnegative and nondecreasing".into()));
        }
        Ok(QuantileFn::Knots { zs, gs, interp })
    }

    /// Step quantile of a discrete claim (its generalized inverse cdf):
    /// `g(z) = v_k` for `z` in `(F_{k-1}, F_k]` with the values sorted
    /// ascending, anchored at `g(0) = 0`.
    pub fn from_discrete(claim: &DiscreteClaim) -> Result<Self> {
        let mut sorted: Vec<(f64, f64)> = claim.outcomes().to_vec();
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if sorted[0].0 < 0.0 {
            return Err(Error::Domain("quantile form requires nonnegative outcomes".into()));
        }
        let mut zs = vec![0.0];
        let mut gs = vec![sorted[0].0];
        let mut cum = 0.0;
        for (i, &(_, p)) in sorted.iter().enumerate() {
            cum += p;
            if i + 1 < sorted.len() {
                zs.push(cum.min(1.0 - 1e-15));
                gs.push(sorted[i + 1].0);
            }
        }
        // Anchor g(0) = 0 even when the lowest outcome is positive; the step
        // evaluator reads values from the knot strictly left of z, so a
        // subnormal-width first segment does not perturb any integral.
        if gs[0] != 0.0 {
            zs.insert(0, 0.0);
            gs.insert(0, 0.0);
            zs[1] = f64::MIN_POSITIVE;
        }
        QuantileFn::knots(zs, gs, Interp::Step)
    }

    /// Evaluate `g(z)`, `z` in [0, 1).
    pub fn eval(&self, z: f64) -> f64 {
        match self {
            QuantileFn::ClosedForm(f) => f(z),
            QuantileFn::Knots { zs, gs, interp } => {
                if z <= 0.0 {
                    return gs[0];
                }
                // index of the last knot strictly left of z
                let idx = match zs.binary_search_by(|x| x.partial_cmp(&z).unwrap()) {
                    Ok(i) => i.saturating_sub(1),
                    Err(i) => i.saturating_sub(1),
                };
                match interp {
                    Interp::Step => gs[idx],
                    Interp::Linear => {
                        if idx + 1 >= zs.len() {
                            gs[zs.len() - 1]
                        } else {
                            let t = (z - zs[idx]) / (zs[idx + 1] - zs[idx]);
                            gs[idx] + t * (gs[idx + 1] - gs[idx])
                        }
                    }
                }
            }
        }
    }

    fn interior_breaks(&self) -> Vec<f64> {
        match self {
            QuantileFn::Knots { zs, .. } => zs.iter().copied().filter(|&z| z > 0.0).collect(),
            QuantileFn::ClosedForm(_) => Vec::new(),
        }
    }
}

/// `int_0^1 u(g(z)) T'(1 - z) dz` by adaptive quadrature. The change of
/// variable `z = s^2` (resp. `1 - s^2`) at each endpoint tames distortion
/// derivatives that diverge at 0 and 1; knot positions seed the subdivision.
pub fn choquet_value_quantile<U: Fn(f64) -> f64>(
    g: &QuantileFn,
    u: U,
    t: &Distortion,
    cfg: &QuadConfig,
) -> Result<f64> {
    let f = |z: f64| u(g.eval(z)) * t.deriv(1.0 - z);
    let mut breaks = g.interior_breaks();
    breaks.retain(|&z| z > 1e-300 && z < 1.0);
    let half = 0.5f64.sqrt();
    // Left half in s-space (z = s^2).
    let mut left_pts = vec![0.0, 0.25 * half, 0.5 * half];
    for &z in &breaks {
        if z < 0.5 {
            left_pts.push(z.sqrt());
        }
    }
    left_pts.push(half);
    left_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    left_pts.dedup();
    let left = adaptive_breakpoints(&|s: f64| 2.0 * s * f(s * s), &left_pts, cfg);
    // Right half in s-space (z = 1 - s^2).
    let mut right_pts = vec![0.0, 0.25 * half, 0.5 * half];
    for &z in &breaks {
        if z >= 0.5 {
            right_pts.push((1.0 - z).sqrt());
        }
    }
    right_pts.push(half);
    right_pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    right_pts.dedup();
    let right = adaptive_breakpoints(&|s: f64| 2.0 * s * f(1.0 - s * s), &right_pts, cfg);
    finish_sum(left, right)
}

fn finish_sum(a: QuadOutcome, b: QuadOutcome) -> Result<f64> {
    let value = a.value + b.value;
    let error = a.error + b.error;
    if a.converged && b.converged {
        Ok(value)
    } else {
        Err(Error::QuadratureNonConvergent {
            estimate: value,
            error,
        })
    }
}

/// Orientation of an arranged claim relative to the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrangement {
    /// `X = g(F(rho))`: moves with the kernel; maximizes `E[X rho]`.
    Comonotone,
    /// `X = g(1 - F(rho))`: moves against the kernel; minimizes `E[X rho]`.
    AntiComonotone,
}

/// A claim with prescribed quantile function, arranged against the kernel.
#[derive(Debug, Clone)]
pub struct ArrangedClaim {
    pub arrangement: Arrangement,
    pub quantile: QuantileFn,
    pub kernel: PricingKernel,
    /// Achieved `E[X rho]`.
    pub product_expectation: f64,
}

impl ArrangedClaim {
    pub fn value_at(&self, rho: f64) -> Result<f64> {
        let z = self.kernel.cdf(rho)?;
        Ok(match self.arrangement {
            Arrangement::Comonotone => self.quantile.eval(z),
            Arrangement::AntiComonotone => self.quantile.eval(1.0 - z),
        })
    }
}

/// Among claims distributed like `g`, the arrangement comonotone with the
/// kernel maximizes `E[X rho]`; returns it with the achieved value
/// `int_0^1 g(z) F^{-1}(z) dz`.
pub fn comonotone_max(
    g: &QuantileFn,
    kernel: &PricingKernel,
    cfg: &QuadConfig,
) -> Result<ArrangedClaim> {
    let price = product_expectation(g, kernel, false, cfg)?;
    Ok(ArrangedClaim {
        arrangement: Arrangement::Comonotone,
        quantile: g.clone(),
        kernel: *kernel,
        product_expectation: price,
    })
}

/// Mirror of `comonotone_max`: the anti-comonotone arrangement minimizes
/// `E[X rho]`, achieving `int_0^1 g(z) F^{-1}(1 - z) dz`.
pub fn anticomonotone_min(
    g: &QuantileFn,
    kernel: &PricingKernel,
    cfg: &QuadConfig,
) -> Result<ArrangedClaim> {
    let price = product_expectation(g, kernel, true, cfg)?;
    Ok(ArrangedClaim {
        arrangement: Arrangement::AntiComonotone,
        quantile: g.clone(),
        kernel: *kernel,
        product_expectation: price,
    })
}

fn product_expectation(
    g: &QuantileFn,
    kernel: &PricingKernel,
    flip: bool,
    cfg: &QuadConfig,
) -> Result<f64> {
    // F^{-1} blows up (integrably) at z = 1; same endpoint treatment as the
    // distorted-value integral.
    let f = |z: f64| {
        let q = kernel.from_score(crate::math::normal::norm_quantile(z.clamp(1e-300, 1.0 - 1e-16)));
        let gz = if flip { g.eval(1.0 - z) } else { g.eval(z) };
        gz * q
    };
    let mut breaks: Vec<f64> = g.interior_breaks();
    if flip {
        breaks = breaks.iter().map(|z| 1.0 - z).collect();
    }
    breaks.retain(|&z| z > 0.0 && z < 1.0);
    let half = 0.5f64.sqrt();
    let mut left_pts = vec![0.0, 0.5 * half];
    let mut right_pts = vec![0.0, 0.5 * half];
    for &z in &breaks {
        if z < 0.5 {
            left_pts.push(z.sqrt());
        } else {
            right_pts.push((1.0 - z).sqrt());
        }
    }
    left_pts.push(half);
    right_pts.push(half);
    for pts in [&mut left_pts, &mut right_pts] {
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
    }
    let left = adaptive_breakpoints(&|s: f64| 2.0 * s * f(s * s), &left_pts, cfg);
    let right = adaptive_breakpoints(&|s: f64| 2.0 * s * f(1.0 - s * s), &right_pts, cfg);
    match finish_sum(left, right) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Divergent { estimate: v }),
        Err(Error::QuadratureNonConvergent { estimate, .. }) if estimate.abs() > 1e10 => {
            Err(Error::Divergent { estimate })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::Threshold;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // T(p) = p^2 as a tabulated curve; admissible and strictly convex,
    // with T(0.5) = 0.25 exactly (0.5 is a knot).
    fn sq() -> Distortion {
        let pts: Vec<(f64, f64)> = (0..=100)
            .map(|i| {
                let z = i as f64 / 100.0;
                (z, z * z)
            })
            .collect();
        Distortion::Tabulated(crate::preferences::MonotoneTable::new(&pts).unwrap())
    }

    #[test]
    fn constant_claim_recovers_utility() {
        let claim = DiscreteClaim::new(vec![(1.0, 1.0)]).unwrap();
        let t = sq();
        let v = choquet_value_discrete(&claim, |x| x.powf(0.88), &t).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_claim_under_squared_weighting() {
        let claim = DiscreteClaim::new(vec![(1.0, 0.5), (0.0, 0.5)]).unwrap();
        let v = choquet_value_discrete(&claim, |x| x, &sq()).unwrap();
        assert!((v - 0.25).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn identity_distortion_reduces_to_expectation() {
        let claim = DiscreteClaim::new(vec![(2.0, 0.3), (1.0, 0.5), (0.0, 0.2)]).unwrap();
        let v = choquet_value_discrete(&claim, |x| x, &Distortion::Identity).unwrap();
        assert!((v - 1.1).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn duplicate_outcomes_merge() {
        let a = DiscreteClaim::new(vec![(1.0, 0.25), (1.0, 0.25), (0.0, 0.5)]).unwrap();
        let b = DiscreteClaim::new(vec![(1.0, 0.5), (0.0, 0.5)]).unwrap();
        let t = sq();
        let va = choquet_value_discrete(&a, |x| x, &t).unwrap();
        let vb = choquet_value_discrete(&b, |x| x, &t).unwrap();
        assert!((va - vb).abs() < 1e-12);
    }

    #[test]
    fn negative_outcome_rejected() {
        let claim = DiscreteClaim::new(vec![(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!(choquet_value_discrete(&claim, |x| x, &Distortion::Identity).is_err());
    }

    #[test]
    fn quantile_matches_discrete_on_steps() {
        let claim = DiscreteClaim::new(vec![(1.0, 0.5), (0.0, 0.5)]).unwrap();
        let g = QuantileFn::from_discrete(&claim).unwrap();
        let t = sq();
        let cfg = QuadConfig::with_tol(1e-11);
        let vq = choquet_value_quantile(&g, |x| x, &t, &cfg).unwrap();
        assert!((vq - 0.25).abs() < 1e-8, "got {vq}");
    }

    #[test]
    fn constant_quantile_gives_utility() {
        let g = QuantileFn::ClosedForm(Arc::new(|_| 0.7));
        let k = PricingKernel::new(-0.07, 0.2).unwrap();
        let t = crate::preferences::build_reversed_s(&k, 1.0, -0.5, 0.5).unwrap();
        let cfg = QuadConfig::with_tol(1e-10);
        let v = choquet_value_quantile(&g, |x| x.powf(0.88), &t, &cfg).unwrap();
        assert!((v - 0.7f64.powf(0.88)).abs() < 1e-8);
    }

    #[test]
    fn uniform_quantile_identity_pair() {
        let g = QuantileFn::ClosedForm(Arc::new(|z| z));
        let cfg = QuadConfig::with_tol(1e-11);
        let v = choquet_value_quantile(&g, |x| x, &Distortion::Identity, &cfg).unwrap();
        assert!((v - 0.5).abs() < 1e-9);
    }

    #[test]
    fn comonotone_two_point_split_prices_tail() {
        let k = PricingKernel::new(-0.07, 0.2).unwrap();
        let med = k.quantile(0.5).unwrap();
        let g = QuantileFn::knots(vec![0.0, 0.5], vec![0.0, 1.0], Interp::Step).unwrap();
        let cfg = QuadConfig::with_tol(1e-11);
        let arr = comonotone_max(&g, &k, &cfg).unwrap();
        let want = k
            .partial_power_moment(1.0, med, Threshold::Infinite)
            .unwrap();
        assert!(
            ((arr.product_expectation - want) / want).abs() < 1e-8,
            "{} vs {}",
            arr.product_expectation,
            want
        );
        // Pointwise: indicator of the upper half.
        assert_eq!(arr.value_at(med * 1.5).unwrap(), 1.0);
        assert_eq!(arr.value_at(med * 0.5).unwrap(), 0.0);

        let anti = anticomonotone_min(&g, &k, &cfg).unwrap();
        let want_lo = k.partial_power_moment(1.0, 0.0, Threshold::Finite(med)).unwrap();
        assert!(((anti.product_expectation - want_lo) / want_lo).abs() < 1e-8);
        assert_eq!(anti.value_at(med * 0.5).unwrap(), 1.0);
    }

    #[test]
    fn constant_distribution_is_arrangement_invariant() {
        let k = PricingKernel::new(-0.07, 0.2).unwrap();
        let g = QuantileFn::ClosedForm(Arc::new(|_| 2.0));
        let cfg = QuadConfig::with_tol(1e-11);
        let hi = comonotone_max(&g, &k, &cfg).unwrap().product_expectation;
        let lo = anticomonotone_min(&g, &k, &cfg).unwrap().product_expectation;
        assert!(((hi - lo) / hi).abs() < 1e-9);
        let mean = k.mean();
        assert!(((hi - 2.0 * mean) / hi).abs() < 1e-9);
    }

    #[test]
    fn permutations_never_beat_arrangements() {
        // 50 equal-probability states, random nonnegative values, 1000
        // random permutations against the sorted arrangements.
        let k = PricingKernel::new(-0.07, 0.2).unwrap();
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho: Vec<f64> = (0..n)
            .map(|i| k.quantile((i as f64 + 0.5) / n as f64).unwrap())
            .collect();
        let mut vals: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 3.0).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let hi: f64 = vals.iter().zip(&rho).map(|(v, r)| v * r).sum();
        let lo: f64 = vals.iter().rev().zip(&rho).map(|(v, r)| v * r).sum();
        let mut perm: Vec<usize> = (0..n).collect();
        for _ in 0..1000 {
            // Fisher-Yates shuffle
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let e: f64 = perm.iter().zip(&rho).map(|(&p, r)| vals[p] * r).sum();
            assert!(e <= hi + 1e-12 * hi.abs());
            assert!(e >= lo - 1e-12 * hi.abs());
        }
    }

    #[test]
    fn pointwise_dominance_preserved() {
        // X >= Y pointwise on a coupled discretization implies value(X) >=
        // value(Y) for any admissible distortion and increasing utility.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let k = PricingKernel::new(0.0, 1.0).unwrap();
        let t = crate::preferences::build_reversed_s(&k, 1.0, -0.4, 0.6).unwrap();
        for _ in 0..50 {
            let n = rng.gen_range(2..8);
            let mut probs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() + 0.05).collect();
            let total: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= total);
            let ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 2.0).collect();
            let xs: Vec<f64> = ys.iter().map(|y| y + rng.gen::<f64>()).collect();
            let cy = DiscreteClaim::new(ys.iter().zip(&probs).map(|(&v, &p)| (v, p)).collect())
                .unwrap();
            let cx = DiscreteClaim::new(xs.iter().zip(&probs).map(|(&v, &p)| (v, p)).collect())
                .unwrap();
            let vy = choquet_value_discrete(&cy, |x| x.sqrt(), &t).unwrap();
            let vx = choquet_value_discrete(&cx, |x| x.sqrt(), &t).unwrap();
            assert!(vx >= vy - 1e-12);
        }
    }
}
