//! Power divergence goodness-of-fit statistics with explicit finite-sample
//! Poisson and Gaussian approximation bounds in the Kolmogorov metric, plus
//! a reproducible Monte Carlo harness for checking those bounds.
//!
//! The scheme, statistic and bound code is generic over [`Scalar`] (`f32`
//! or `f64`); the aliases below fix it to `f64`, which the Monte Carlo
//! harness uses throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod montecarlo;
pub mod scalar;
pub mod scheme;
mod serde_util;
pub mod statistic;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use serde_util::fmt_scalar;

pub type Scheme = scheme::ClassificationScheme<f64>;
pub type SchemeF32 = scheme::ClassificationScheme<f32>;
pub type Descriptor = scheme::SchemeDescriptor<f64>;
pub type Config = statistic::StatisticConfig<f64>;
pub type ConfigF32 = statistic::StatisticConfig<f32>;
pub type Breakdown = bounds::BoundBreakdown<f64>;
pub type Split = statistic::RepresentationSplit<f64>;
pub type Generalized = bounds::GeneralizedSpec<f64>;
