//! Special functions and small numerical utilities shared by the rest of the crate.

mod lambert;
mod quadrature;
mod special;

pub use lambert::{lambert_w0, lambert_w0_of_exp};
pub use quadrature::{adaptive_quadrature, finite_difference_derivative};
pub use special::{ln_regularized_incomplete_beta, log_gamma, regularized_incomplete_beta};

use crate::error::{Error, Result};

/// Stopping rule for iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, max_iter: usize) -> Result<Self> {
        if !(abs > 0.0) || !(rel > 0.0) || max_iter == 0 {
            return Err(Error::Domain(format!(
                "tolerance needs abs > 0, rel > 0, max_iter >= 1 (got {abs}, {rel}, {max_iter})"
            )));
        }
        Ok(Self { abs, rel, max_iter })
    }

    /// True when `err` is within either the absolute or the relative budget for `value`.
    pub fn accepts(&self, err: f64, value: f64) -> bool {
        err <= self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-12,
            max_iter: 200,
        }
    }
}
