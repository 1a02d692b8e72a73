//! Estimation of approximate differential privacy guarantees from samples.
//!
//! Given black-box access to a mechanism evaluated on two neighboring
//! databases, this crate estimates the divergence
//! `d_eps(P||Q) = sum_i [p_i - e^eps q_i]^+` that characterizes
//! `(eps, delta)`-DP, using either a plug-in estimator or a
//! minimax-rate-optimal estimator built from best polynomial
//! approximations of the non-smooth part of the functional.
//!
//! The crate is organized as:
//!
//! - [`divergence`]: exact distributions and exact `d_eps` evaluation;
//! - [`sampling`]: Poissonized sampling and MLE histograms;
//! - [`poly`]: Remez and filtered-Chebyshev polynomial approximations;
//! - [`mvue`]: unbiased estimators of polynomial functionals of Poisson means;
//! - [`estimators`]: the plug-in and the two polynomial-approximation
//!   estimators, with regime classification;
//! - [`mechanisms`]: a zoo of correct and deliberately broken DP mechanisms;
//! - [`audit`]: the Monte-Carlo audit harness producing `(eps, delta-hat)`
//!   reports and violation certificates.

pub mod audit;
pub mod divergence;
pub mod estimators;
pub mod mechanisms;
pub mod mvue;
pub mod oracle;
pub mod poly;
pub mod sampling;

use thiserror::Error;

/// Errors surfaced by the estimation and audit pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("estimator contract violated: {0}")]
    Contract(String),

    #[error("{0} failed to converge: {1}")]
    Convergence(&'static str, String),

    #[error("audit is degenerate: {0}")]
    DegenerateAudit(String),

    #[error("coefficient cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
