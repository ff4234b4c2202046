//! The hard cap model of spherical codes.
//!
//! A grand canonical hard cap configuration is a Poisson process on the unit
//! sphere `S_{d-1}` conditioned on every pair of points being at angle at least
//! `theta`. This crate evaluates the closed-form bounds on the maximum size of
//! such codes, samples the model (exactly by rejection or by birth-death MCMC),
//! and checks the identities that connect its expected size to free area,
//! partition functions and cap geometry.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod codes;
pub mod error;
pub mod experiments;
pub mod fmt;
pub mod geometry;
pub mod hardcap;
pub mod numerics;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
