//! Optimal error intervals for scalar properties of quantum states.
//!
//! The data are click counts of a probability-operator measurement. For a
//! property `F = f(p)` of the state the crate computes the F-likelihood
//! `L(D|F)` by Monte Carlo integration over the physical probability space,
//! and from it the bounded-likelihood intervals, their size and credibility,
//! smallest credible intervals and the plausible interval.
//!
//! Module overview:
//! - [`state`]: POMs, the Born rule, physicality and click simulation.
//! - [`properties`]: fidelity, purity and CHSH quantities.
//! - [`sampling`]: prior/posterior densities and the MCMC sampler.
//! - [`fit`]: Fourier and beta-mixture models of content curves.
//! - [`marginal`]: content curves, the reference-prior iteration and `L(D|F)`.
//! - [`intervals`]: interval families, SCIs, plausible intervals, ISPE.
//! - [`jaynes`]: the exponential first-failure benchmark.

pub mod error;
pub mod fit;
pub mod intervals;
pub mod jaynes;
pub mod marginal;
pub mod properties;
pub mod sampling;
pub mod state;

pub use error::{Error, Result};
