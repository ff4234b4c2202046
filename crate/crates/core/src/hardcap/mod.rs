//! The grand canonical hard cap model on the sphere or on a sub-region.
//!
//! A configuration is a Poisson process of intensity `lambda` (with respect to
//! normalized surface measure) on a region `A`, conditioned on all pairwise
//! angles being at least `theta`. Samplers: exact rejection ([`sample_exact`])
//! and a birth-death Metropolis chain ([`bd_mcmc_step`], [`run_chain`]).
//!
//! Regions are sampled through an *envelope* of exactly known measure: the
//! region itself for the sphere and for caps, and the cap `C_theta(v)` for a
//! [`TRegion`]. Proposals falling outside the region are discarded, which
//! thins a Poisson process on the envelope to one on the region, so no
//! estimate of `s(T)` enters any sampler.

mod estimators;
mod sampler;

pub use estimators::{
    estimate_alpha, estimate_free_area, estimate_size_distribution, estimate_t_measure, free_area_of,
    sample_t, sample_t_batch, truncated_partition_function, PartitionEstimate, SizeDistribution, TSample,
    EXACT_MAX_ATTEMPTS, TRUNCATION_THRESHOLD,
};
pub(crate) use estimators::{observe_model_with, size_distribution_from};
pub use sampler::{
    bd_mcmc_step, run_chain, run_chain_from, sample_exact, ChainConfig, SamplerKind, EXACT_SAMPLER_MAX_MEAN,
};

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{dot, sample_uniform_sphere, Cap, CapSampler, UnitVector};
use crate::seed::{replica_rng, RandomSource};

/// Number of independent streams an estimator splits its budget across.
/// Fixed, so results do not depend on the thread count.
pub const REPLICAS: u64 = 16;

/// `(d, theta, lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: usize,
    pub theta: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(d: usize, theta: f64, lambda: f64) -> Result<Self> {
        if d < 2 {
            return domain(format!("dimension must be >= 2, got {d}"));
        }
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return domain(format!("code angle must lie in (0, pi/2), got {theta}"));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("fugacity must be positive and finite, got {lambda}"));
        }
        Ok(Self { d, theta, lambda })
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.d, self.theta, lambda)
    }
}

/// The random set `T`: points of `C_theta(v)` not blocked by any codeword
/// outside that cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TRegion {
    pub v: UnitVector,
    pub theta: f64,
    pub blockers: Vec<UnitVector>,
}

impl TRegion {
    pub fn contains(&self, y: &UnitVector) -> bool {
        self.contains_coords(y.coords())
    }

    fn contains_coords(&self, y: &[f64]) -> bool {
        let c = self.theta.cos();
        dot(self.v.coords(), y) >= c && self.blockers.iter().all(|b| dot(b.coords(), y) <= c)
    }
}

/// Where the model lives.
#[derive(Debug, Clone)]
pub enum Region {
    FullSphere { dim: usize },
    Cap(CapSampler),
    T { region: TRegion, envelope: CapSampler },
}

impl Region {
    pub fn full_sphere(dim: usize) -> Result<Self> {
        if dim < 2 {
            return domain(format!("dimension must be >= 2, got {dim}"));
        }
        Ok(Region::FullSphere { dim })
    }

    pub fn cap(cap: Cap) -> Self {
        Region::Cap(CapSampler::new(cap))
    }

    pub fn t_region(region: TRegion) -> Result<Self> {
        let envelope = CapSampler::new(Cap::new(region.v.clone(), region.theta)?);
        Ok(Region::T { region, envelope })
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::FullSphere { dim } => *dim,
            Region::Cap(s) => s.cap().dim(),
            Region::T { region, .. } => region.v.dim(),
        }
    }

    /// Exact normalized measure, when known (not for `T`).
    pub fn measure(&self) -> Option<f64> {
        match self {
            Region::FullSphere { .. } => Some(1.0),
            Region::Cap(s) => Some(s.area()),
            Region::T { .. } => None,
        }
    }

    /// Measure of the sampling envelope (always exact).
    pub fn envelope_measure(&self) -> f64 {
        match self {
            Region::FullSphere { .. } => 1.0,
            Region::Cap(s) => s.area(),
            Region::T { envelope, .. } => envelope.area(),
        }
    }

    pub fn contains(&self, y: &UnitVector) -> bool {
        match self {
            Region::FullSphere { .. } => true,
            Region::Cap(s) => s.cap().contains(y),
            Region::T { region, .. } => region.contains(y),
        }
    }

    /// Uniform point of the envelope; the caller discards it if outside the region.
    pub fn sample_envelope<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        match self {
            Region::FullSphere { dim } => sample_uniform_sphere(*dim, rng).expect("dim validated"),
            Region::Cap(s) => s.sample(rng),
            Region::T { envelope, .. } => envelope.sample(rng),
        }
    }

    /// Uniform point of the envelope that lies in the region, if any.
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<UnitVector> {
        let y = self.sample_envelope(rng);
        self.contains(&y).then_some(y)
    }

    /// Serializable description for run manifests.
    pub fn describe(&self) -> RegionSpec {
        match self {
            Region::FullSphere { dim } => RegionSpec::FullSphere { dim: *dim },
            Region::Cap(s) => RegionSpec::Cap {
                cap: s.cap().clone(),
                measure: s.area(),
            },
            Region::T { region, envelope } => RegionSpec::T {
                v: region.v.clone(),
                theta: region.theta,
                n_blockers: region.blockers.len(),
                envelope_measure: envelope.area(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    FullSphere { dim: usize },
    Cap { cap: Cap, measure: f64 },
    T { v: UnitVector, theta: f64, n_blockers: usize, envelope_measure: f64 },
}

/// Runs `job(replica_index, rng)` for each of `replicas` derived streams in
/// parallel and returns the results in replica order.
pub(crate) fn run_replicas<T, F>(seed: u64, replicas: u64, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut RandomSource) -> T + Sync,
{
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            job(i, &mut rng)
        })
        .collect()
}

/// Splits `total` into `parts` nearly equal shares.
pub(crate) fn split_budget(total: u64, parts: u64) -> Vec<u64> {
    (0..parts)
        .map(|i| total / parts + u64::from(i < total % parts))
        .collect()
}
