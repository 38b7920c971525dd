//! Lognormal pricing kernel analytics.
//!
//! The terminal state-price density is lognormal: `ln rho ~ N(mu, sd^2)`
//! with `mu = -(r + |theta|^2/2) T` and `sd = |theta| sqrt(T)` when built
//! from constant market coefficients. Everything the solvers need reduces
//! to the distribution function, its inverse, and truncated power moments
//! `E[rho^beta 1{a < rho <= b}]`, all in closed form.

use crate::error::{Error, Result};
use crate::math::linalg;
use crate::math::normal::{norm_cdf, norm_pdf, norm_quantile, norm_sf};

/// Upper endpoint of a `rho`-interval. The essential supremum of a lognormal
/// kernel is infinite, and that boundary case is structural (it encodes the
/// "no loss region" corner of the master program), so it is carried as an
/// explicit sentinel rather than as a floating-point value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Finite(f64),
    Infinite,
}

impl Threshold {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Threshold::Infinite)
    }

    /// Finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Threshold::Finite(v) => Some(*v),
            Threshold::Infinite => None,
        }
    }

    pub fn min_finite(&self, cap: f64) -> f64 {
        match self {
            Threshold::Finite(v) => v.min(cap),
            Threshold::Infinite => cap,
        }
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Finite(v) => write!(f, "{v}"),
            Threshold::Infinite => write!(f, "inf"),
        }
    }
}

impl From<f64> for Threshold {
    fn from(v: f64) -> Self {
        if v.is_infinite() && v > 0.0 {
            Threshold::Infinite
        } else {
            Threshold::Finite(v)
        }
    }
}

/// Constant-coefficient market primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    /// Risk-free rate (1/year).
    pub r: f64,
    /// Excess return vector of the risky assets (1/year).
    pub b: Vec<f64>,
    /// Volatility matrix, row i = loadings of asset i (1/sqrt(year)).
    pub sigma: Vec<Vec<f64>>,
    /// Horizon (years).
    pub horizon: f64,
}

impl MarketParams {
    pub fn new(r: f64, b: Vec<f64>, sigma: Vec<Vec<f64>>, horizon: f64) -> Result<Self> {
        let m = MarketParams {
            r,
            b,
            sigma,
            horizon,
        };
        m.validate()?;
        Ok(m)
    }

    /// Convenience constructor for a one-stock market.
    pub fn single_asset(r: f64, excess_return: f64, vol: f64, horizon: f64) -> Result<Self> {
        MarketParams::new(r, vec![excess_return], vec![vec![vol]], horizon)
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::Model("horizon must be positive".into()));
        }
        if self.b.is_empty() || self.b.len() != self.sigma.len() {
            return Err(Error::Model(
                "excess-return vector and volatility matrix sizes disagree".into(),
            ));
        }
        self.theta()?;
        Ok(())
    }

    /// Market price of risk `theta = sigma^{-1} B`.
    pub fn theta(&self) -> Result<Vec<f64>> {
        linalg::solve(&self.sigma, &self.b)
    }

    pub fn theta_norm(&self) -> Result<f64> {
        let t = self.theta()?;
        Ok(t.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// `(sigma sigma')^{-1} B`, the vector every allocation formula scales.
    pub fn risk_adjusted_direction(&self) -> Result<Vec<f64>> {
        linalg::solve_aat(&self.sigma, &self.b)
    }
}

/// Law of `ln rho(T)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingKernel {
    mu: f64,
    sd: f64,
}

impl PricingKernel {
    pub fn new(mu: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !sd.is_finite() || !mu.is_finite() {
            return Err(Error::Model(format!(
                "degenerate kernel: need finite mu and sd > 0, got mu = {mu}, sd = {sd}"
            )));
        }
        Ok(PricingKernel { mu, sd })
    }

    /// Kernel implied by constant market coefficients at time 0.
    pub fn from_market(market: &MarketParams) -> Result<Self> {
        let theta = market.theta_norm()?;
        if theta <= 0.0 {
            return Err(Error::Model(
                "degenerate kernel: |theta| must be positive".into(),
            ));
        }
        let t = market.horizon;
        PricingKernel::new(-(market.r + theta * theta / 2.0) * t, theta * t.sqrt())
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sd(&self) -> f64 {
        self.sd
    }

    /// Normal score of a kernel value: `(ln x - mu)/sd`.
    #[inline]
    pub fn score(&self, x: f64) -> f64 {
        (x.ln() - self.mu) / self.sd
    }

    /// Kernel value at a normal score.
    #[inline]
    pub fn from_score(&self, w: f64) -> f64 {
        (self.mu + self.sd * w).exp()
    }

    /// `F(x) = P(rho <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("cdf requires x > 0, got {x}")));
        }
        Ok(norm_cdf(self.score(x)))
    }

    /// Density of `rho`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("pdf requires x > 0, got {x}")));
        }
        Ok(norm_pdf(self.score(x)) / (x * self.sd))
    }

    /// `F^{-1}(p)` for `p` in (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!(
                "quantile requires p in (0,1), got {p}"
            )));
        }
        Ok(self.from_score(norm_quantile(p)))
    }

    /// `E[rho^beta 1{a < rho <= b}]` in closed form, with `ln 0 = -inf`.
    pub fn partial_power_moment(&self, beta: f64, a: f64, b: Threshold) -> Result<f64> {
        if a < 0.0 {
            return Err(Error::Domain(format!(
                "moment lower limit must be nonnegative, got {a}"
            )));
        }
        if let Threshold::Finite(bv) = b {
            if a > bv {
                return Err(Error::Domain(format!(
                    "moment limits out of order: a = {a} > b = {bv}"
                )));
            }
        }
        let shift = self.mu + beta * self.sd * self.sd;
        let z_lo = if a == 0.0 {
            f64::NEG_INFINITY
        } else {
            (a.ln() - shift) / self.sd
        };
        let z_hi = match b {
            Threshold::Finite(bv) => {
                if bv == 0.0 {
                    return Ok(0.0);
                }
                (bv.ln() - shift) / self.sd
            }
            Threshold::Infinite => f64::INFINITY,
        };
        let prefactor = (beta * self.mu + beta * beta * self.sd * self.sd / 2.0).exp();
        Ok(prefactor * band_probability(z_lo, z_hi))
    }

    /// `E[rho]`, which equals `e^{-rT}` for a market-built kernel.
    pub fn mean(&self) -> f64 {
        (self.mu + self.sd * self.sd / 2.0).exp()
    }
}

/// `P(z_lo < Z <= z_hi)` for a standard normal, stable in both tails.
fn band_probability(z_lo: f64, z_hi: f64) -> f64 {
    if z_hi <= z_lo {
        return 0.0;
    }
    if z_lo > 0.0 {
        (norm_sf(z_lo) - norm_sf(z_hi)).max(0.0)
    } else {
        (norm_cdf(z_hi) - norm_cdf(z_lo)).max(0.0)
    }
}
