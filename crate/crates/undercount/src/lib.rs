//! A count-regression toolkit built around the Gamma-count model.
//!
//! Counts whose interarrival times are iid Gamma(α, β) are underdispersed
//! for α > 1 and overdispersed for α < 1, with the Poisson model recovered
//! exactly at α = 1. The crate provides:
//!
//! - the Gamma-count distribution (PMF, CDF, moments, interarrival hazard),
//! - a Gamma renewal-process simulator usable as a Monte-Carlo oracle,
//! - design matrices for the five nested defoliation predictors,
//! - a reference Poisson / quasi-Poisson IRLS fitter,
//! - maximum-likelihood fitting of the Gamma-count regression with
//!   numerical-Hessian covariances, likelihood-ratio tests and AIC,
//! - Wald and profile-likelihood confidence intervals, 2-D profile regions,
//!   prediction bands and fitted PMF tables,
//! - a CLI (`undercount`) over CSV data with JSON/CSV outputs.

pub mod design;
pub mod error;
pub mod gamma_count;
pub mod glm;
pub mod inference;
pub mod mle;
pub mod optim;
pub mod renewal;
pub mod report;
pub mod special;

pub use error::{Error, Result};
