//! `ampest`: competitive estimation of additive properties of discrete distributions.
//!
//! An additive property is a functional `f(p) = Σ_x f_x(p_x)` of an unknown distribution `p`:
//! Shannon entropy, normalized support size, support coverage, power sums, distance to
//! uniformity, L1 distance and KL divergence to a known reference.
//!
//! The crate provides
//!
//! - the plug-in estimator and the rate-normalized ("modified") plug-in estimator,
//! - the amplified estimator, which uses `n` samples to emulate the plug-in estimator run
//!   on roughly `n·t` samples: symbols seen often are handled by the plug-in rule, rare symbols
//!   by an unbiased polynomial-smoothing series whose coefficients are precomputed per property,
//! - Poissonized samplers for the usual synthetic families (uniform, Dirichlet-drawn, Zipf,
//!   binomial, Poisson, geometric),
//! - a reproducible Monte-Carlo harness reporting mean squared error over `n`-grids,
//! - the numerical oracles (Bessel-kernel quadrature, series/quadrature consistency,
//!   coefficient envelopes) that validate the coefficient construction.
//!
//! ## Quick start
//!
//! ```
//! use ampest::{estimators, Histogram, PropertySpec};
//!
//! let hist = Histogram::from_counts([(0, 3), (1, 1)]);
//! let h = estimators::empirical(&hist, &PropertySpec::Entropy).unwrap();
//! assert!((h - 0.5623351446188083).abs() < 1e-12);
//! ```
//!
//! See the `examples/` directory of this crate for one runnable program per capability.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod cli;
pub mod distributions;
pub mod estimators;
pub mod numerics;
pub mod properties;
pub mod selfcheck;

mod error;

pub use distributions::{Distribution, Family, Histogram, SplitMode, SplitSample};
pub use error::{Error, Result};
pub use estimators::{AmplifiedEstimate, AmplifiedEstimator, CoefficientTable, EstimatorParams};
pub use properties::PropertySpec;
