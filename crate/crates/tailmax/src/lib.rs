//! Tail regression for max-linear models.
//!
//! Estimates the coefficients of `Y = max_j(beta_j * X_j) + eps` from the
//! joint tail of `(X, Y)` alone: Hill estimates of the extreme value index,
//! a rank-based tail copula, and estimating equations solved for the scaled
//! coefficients `theta_j = (beta_j / alpha_j)^(1/gamma)`. A conditional
//! least squares baseline, a Monte Carlo study harness, and a panel
//! pipeline for real data sit on top.
//!
//! The `parallel` feature (on by default) runs simulation replications and
//! per-entity analyses on a rayon pool; without it everything is sequential
//! with identical output.

pub mod dist;
pub mod evt;
pub mod pipeline;
pub mod regression;
pub mod simulation;
pub mod taildep;

mod exec;
mod mvt;

pub use evt::{RankVector, Series, TailCount};
pub use regression::{BetaFit, ClsFit, FitConfig, TailSample};
pub use simulation::{DgpSpec, Model, MseTable};
pub use taildep::{ModelParams, TailCopula, ThetaVector};
