//! Continuous-time behavioral portfolio selection.
//!
//! The library prices and optimizes terminal-wealth claims for an investor
//! who values gains and losses through S-shaped utilities and distorted
//! (Choquet) expectations, in a complete lognormal-kernel market:
//!
//! * [`kernel`] — lognormal pricing-kernel analytics (cdf, quantiles,
//!   truncated power moments);
//! * [`preferences`] — utilities, probability distortions, and the
//!   assumption audit;
//! * [`choquet`] — distorted expectations in discrete and quantile form and
//!   comonotone arrangement bounds;
//! * [`solver`] — well-posedness classification and the two-part master
//!   program producing the optimal terminal claim;
//! * [`replication`] — wealth/portfolio processes replicating binary power
//!   claims and the optimal claim, with allocation diagnostics;
//! * [`oracle`] — finite-state brute-force search used to verify solver
//!   output structure and values at desk scale.

pub mod choquet;
pub mod error;
pub mod kernel;
pub mod math;
pub mod oracle;
pub mod preferences;
pub mod replication;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{MarketParams, PricingKernel, Threshold};
pub use preferences::{Distortion, SShapedUtility};
pub use solver::{BehavioralModel, Classification, ClassifyOutcome, TerminalClaim, Wellposedness};
