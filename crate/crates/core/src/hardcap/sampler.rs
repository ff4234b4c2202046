use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{ModelParams, Region};
use crate::error::{Error, Result};
use crate::geometry::SphericalCode;

/// Above this expected envelope count, estimators switch from exact rejection
/// sampling to the birth-death chain.
pub const EXACT_SAMPLER_MAX_MEAN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exact,
    Chain,
}

impl SamplerKind {
    pub fn choose(params: &ModelParams, region: &Region) -> Self {
        if params.lambda * region.envelope_measure() <= EXACT_SAMPLER_MAX_MEAN {
            SamplerKind::Exact
        } else {
            SamplerKind::Chain
        }
    }
}

/// Exact sample: `k ~ Poisson(lambda s(envelope))` uniform envelope points,
/// those outside the region dropped, accepted iff the rest form a code.
pub fn sample_exact<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    rng: &mut R,
    max_attempts: u64,
) -> Result<SphericalCode> {
    let mean = params.lambda * region.envelope_measure();
    let poisson = if mean > 0.0 {
        Some(Poisson::new(mean).map_err(|e| Error::Domain(format!("poisson mean {mean}: {e}")))?)
    } else {
        None
    };
    let mut code = SphericalCode::empty(region.dim(), params.theta)?;
    'attempt: for _ in 0..max_attempts {
        code.points.clear();
        let k = poisson.as_ref().map_or(0, |p| p.sample(rng) as u64);
        for _ in 0..k {
            let y = region.sample_envelope(rng);
            if !region.contains(&y) {
                continue;
            }
            // rejecting at the first conflict is the same event as checking the full set
            if !code.admits(&y) {
                continue 'attempt;
            }
            code.points.push(y);
        }
        return Ok(code);
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
    })
}

/// One birth-death Metropolis move. Returns whether the configuration changed.
///
/// With `m = lambda s(envelope)` and `n = |code|`: a birth at a uniform
/// envelope point (discarded outside the region or on conflict) is accepted
/// with probability `min(1, m/(n+1))`; a death of a uniformly chosen point with
/// probability `min(1, n/m)`. Each move type is proposed with probability 1/2.
///
/// Detailed balance: the target has density `pi(x) = lambda^n` (restricted to
/// codes) with respect to the unit-rate Poisson process of the normalized
/// measure on `A`. For `x` of size `n` and an admissible `y` in `A`,
///
/// ```text
/// pi(x) * 1/2 * (1/s(B)) * min(1, m/(n+1))  =  pi(x+y) * 1/2 * 1/(n+1) * min(1, (n+1)/m)
/// ```
///
/// as both sides equal `lambda^n min(1/s(B), lambda/(n+1)) / 2`, using
/// `m = lambda s(B)`.
pub fn bd_mcmc_step<R: Rng + ?Sized>(
    code: &mut SphericalCode,
    params: &ModelParams,
    region: &Region,
    rng: &mut R,
) -> bool {
    let m = params.lambda * region.envelope_measure();
    let n = code.len();
    if rng.random::<bool>() {
        let y = region.sample_envelope(rng);
        if !region.contains(&y) || !code.admits(&y) {
            return false;
        }
        let accept = (m / (n + 1) as f64).min(1.0);
        if accept >= 1.0 || rng.random::<f64>() < accept {
            code.points.push(y);
            return true;
        }
        false
    } else {
        if n == 0 {
            return false;
        }
        let i = rng.random_range(0..n);
        let accept = (n as f64 / m).min(1.0);
        if accept >= 1.0 || rng.random::<f64>() < accept {
            code.points.swap_remove(i);
            return true;
        }
        false
    }
}

/// Chain schedule. A sweep is `max(1, round(lambda s(envelope)))` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub sweeps: u64,
    pub burnin: u64,
    pub thin: u64,
}

impl ChainConfig {
    pub const DEFAULT_THIN: u64 = 10;

    pub fn new(sweeps: u64, burnin: u64, thin: u64) -> Result<Self> {
        if sweeps <= burnin || thin == 0 {
            return Err(Error::Domain(format!(
                "chain needs sweeps > burnin and thin >= 1, got {sweeps}, {burnin}, {thin}"
            )));
        }
        Ok(Self { sweeps, burnin, thin })
    }

    /// Schedule yielding exactly `n` samples with the default thinning and a
    /// burn-in of 20% of all sweeps.
    pub fn for_samples(n: u64) -> Self {
        let kept = n.max(1) * Self::DEFAULT_THIN;
        let burnin = kept.div_ceil(4);
        Self {
            sweeps: burnin + kept,
            burnin,
            thin: Self::DEFAULT_THIN,
        }
    }

    pub fn n_samples(&self) -> u64 {
        (self.sweeps - self.burnin) / self.thin
    }
}

pub(crate) fn sweep_len(params: &ModelParams, region: &Region) -> u64 {
    ((params.lambda * region.envelope_measure()).round() as u64).max(1)
}

/// Runs a chain from `start`, calling `visit` on every kept sample.
pub(crate) fn run_chain_visit<R, F>(
    mut state: SphericalCode,
    params: &ModelParams,
    region: &Region,
    cfg: ChainConfig,
    rng: &mut R,
    mut visit: F,
) -> SphericalCode
where
    R: Rng + ?Sized,
    F: FnMut(&SphericalCode, &mut R),
{
    let steps = sweep_len(params, region);
    for sweep in 1..=cfg.sweeps {
        for _ in 0..steps {
            bd_mcmc_step(&mut state, params, region, rng);
        }
        if sweep > cfg.burnin && (sweep - cfg.burnin).is_multiple_of(cfg.thin) {
            visit(&state, rng);
        }
    }
    state
}

/// Thinned post-burn-in samples of a chain started from the empty configuration.
pub fn run_chain<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    cfg: ChainConfig,
    rng: &mut R,
) -> Result<Vec<SphericalCode>> {
    run_chain_from(SphericalCode::empty(region.dim(), params.theta)?, params, region, cfg, rng)
}

pub fn run_chain_from<R: Rng + ?Sized>(
    start: SphericalCode,
    params: &ModelParams,
    region: &Region,
    cfg: ChainConfig,
    rng: &mut R,
) -> Result<Vec<SphericalCode>> {
    let mut out = Vec::with_capacity(cfg.n_samples() as usize);
    run_chain_visit(start, params, region, cfg, rng, |c, _| out.push(c.clone()));
    Ok(out)
}
