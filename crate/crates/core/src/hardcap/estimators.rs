use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::{run_chain_visit, sample_exact, ChainConfig, SamplerKind};
use super::{run_replicas, split_budget, ModelParams, Region, TRegion, REPLICAS};
use crate::error::{domain, Error, Result};
use crate::geometry::{dot, sample_uniform_sphere, Cap, CapSampler, SphericalCode};
use crate::numerics::log_gamma;
use crate::seed::RandomSource;
use crate::stats::{batch_means_estimate, pool, EstimateWithError};

/// Rejections tolerated per exact draw before giving up.
pub const EXACT_MAX_ATTEMPTS: u64 = 1_000_000;

/// Relative size of the last series term above which a truncated partition
/// function is flagged.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Draws `total` configurations (split over the fixed replicas) and maps each
/// through `observe`. Replica outputs are returned in replica order.
pub(crate) fn observe_model<T, F>(
    params: &ModelParams,
    region: &Region,
    total: u64,
    seed: u64,
    observe: F,
) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&SphericalCode, &mut RandomSource) -> T + Sync,
{
    observe_model_with(SamplerKind::choose(params, region), params, region, total, seed, observe)
}

pub(crate) fn observe_model_with<T, F>(
    kind: SamplerKind,
    params: &ModelParams,
    region: &Region,
    total: u64,
    seed: u64,
    observe: F,
) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(&SphericalCode, &mut RandomSource) -> T + Sync,
{
    let shares = split_budget(total, REPLICAS);
    run_replicas(seed, REPLICAS, |i, rng| -> Result<Vec<T>> {
        let n = shares[i as usize];
        let mut out = Vec::with_capacity(n as usize);
        if n == 0 {
            return Ok(out);
        }
        match kind {
            SamplerKind::Exact => {
                for _ in 0..n {
                    let x = sample_exact(params, region, rng, EXACT_MAX_ATTEMPTS)?;
                    out.push(observe(&x, rng));
                }
            }
            SamplerKind::Chain => {
                let start = SphericalCode::empty(region.dim(), params.theta)?;
                run_chain_visit(start, params, region, ChainConfig::for_samples(n), rng, |x, r| {
                    out.push(observe(x, r))
                });
            }
        }
        Ok(out)
    })
    .into_iter()
    .collect()
}

fn pooled_mean(parts: &[Vec<f64>]) -> EstimateWithError {
    let ests: Vec<_> = parts
        .iter()
        .filter(|p| !p.is_empty())
        .map(|p| batch_means_estimate(p))
        .collect();
    pool(&ests)
}

fn check_budget(name: &str, n: u64) -> Result<()> {
    if n == 0 {
        return domain(format!("{name} must be at least 1"));
    }
    Ok(())
}

/// Expected configuration size `alpha` on the region, with a batch-means stderr.
pub fn estimate_alpha<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    budget: u64,
    rng: &mut R,
) -> Result<EstimateWithError> {
    check_budget("budget", budget)?;
    let sizes = observe_model(params, region, budget, rng.random(), |x, _| x.len() as f64)?;
    Ok(pooled_mean(&sizes))
}

/// Normalized measure of the points of the region that could be added to `code`,
/// estimated from `n_test` uniform envelope points.
pub fn free_area_of<R: Rng + ?Sized>(
    code: &SphericalCode,
    region: &Region,
    n_test: u64,
    rng: &mut R,
) -> f64 {
    let mut free = 0u64;
    for _ in 0..n_test {
        if let Some(y) = region.propose(rng) {
            if code.admits(&y) {
                free += 1;
            }
        }
    }
    region.envelope_measure() * free as f64 / n_test as f64
}

/// Free area `F`: expected normalized measure of the points of the region at
/// angle greater than `theta` from every point of the configuration.
pub fn estimate_free_area<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    n_outer: u64,
    n_test: u64,
    rng: &mut R,
) -> Result<EstimateWithError> {
    check_budget("n_outer", n_outer)?;
    check_budget("n_test", n_test)?;
    let vals = observe_model(params, region, n_outer, rng.random(), |x, r| {
        free_area_of(x, region, n_test, r)
    })?;
    Ok(pooled_mean(&vals))
}

/// One draw of the two-part experiment, with the number of configuration
/// points that fell inside `C_theta(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSample {
    pub region: TRegion,
    pub inside: usize,
}

fn split_at_cap(x: &SphericalCode, v: crate::geometry::UnitVector) -> TSample {
    let c = x.theta.cos();
    let (inner, outer): (Vec<_>, Vec<_>) =
        x.points.iter().cloned().partition(|p| dot(p.coords(), v.coords()) >= c);
    TSample {
        region: TRegion {
            v,
            theta: x.theta,
            blockers: outer,
        },
        inside: inner.len(),
    }
}

/// `n` draws of the two-part experiment: a configuration on the whole sphere,
/// an independent uniform `v`, and the configuration points outside `C_theta(v)`.
pub fn sample_t_batch<R: Rng + ?Sized>(params: &ModelParams, n: u64, rng: &mut R) -> Result<Vec<TSample>> {
    check_budget("n", n)?;
    let sphere = Region::full_sphere(params.d)?;
    let d = params.d;
    let parts = observe_model(params, &sphere, n, rng.random(), |x, r| {
        split_at_cap(x, sample_uniform_sphere(d, r).expect("dim validated"))
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn sample_t<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> Result<TRegion> {
    Ok(sample_t_batch(params, 1, rng)?.remove(0).region)
}

/// `s(T)` as `s_d(theta)` times the fraction of uniform cap points in `T`.
pub fn estimate_t_measure<R: Rng + ?Sized>(t: &TRegion, n_test: u64, rng: &mut R) -> Result<EstimateWithError> {
    check_budget("n_test", n_test)?;
    let sampler = CapSampler::new(Cap::new(t.v.clone(), t.theta)?);
    let hits = (0..n_test).filter(|_| t.contains(&sampler.sample(rng))).count();
    let n = n_test as f64;
    let p = hits as f64 / n;
    Ok(EstimateWithError::new(p, (p * (1.0 - p) / n).sqrt(), n_test).scale(sampler.area()))
}

/// Truncated series for the partition function of the model on a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionEstimate {
    pub k_max: usize,
    pub n_samples: u64,
    /// Canonical partition function estimates for `k = 0..=k_max`.
    pub z_hat: Vec<EstimateWithError>,
    pub z: EstimateWithError,
    pub log_z: EstimateWithError,
    /// `lambda Z'(lambda) / Z(lambda)` from the same draws.
    pub alpha: EstimateWithError,
    /// Size law `lambda^k Zhat(k) / Z`, `k = 0..=k_max`.
    pub size_probs: Vec<EstimateWithError>,
    pub last_term_relative: f64,
    pub truncated: bool,
}

impl PartitionEstimate {
    /// Fails with a truncation error if the last term is not negligible.
    pub fn certify(self) -> Result<Self> {
        if self.truncated {
            return Err(Error::Truncation {
                relative: self.last_term_relative,
            });
        }
        Ok(self)
    }
}

/// Longest prefix (at most `k_max`) of uniform envelope draws that lies in the
/// region and forms a code.
fn code_prefix<R: Rng + ?Sized>(region: &Region, theta_cos: f64, k_max: usize, buf: &mut Vec<Vec<f64>>, rng: &mut R) -> usize {
    buf.clear();
    for _ in 0..k_max {
        let y = region.sample_envelope(rng);
        if !region.contains(&y) || buf.iter().any(|p| dot(p, y.coords()) > theta_cos) {
            break;
        }
        buf.push(y.into_coords());
    }
    buf.len()
}

/// Mean of `f(m)` and of the ratio `f(m)/g(m)` means, from a histogram of `m`.
fn ratio_from_hist(hist: &[u64], n: f64, f: impl Fn(usize) -> f64, g: impl Fn(usize) -> f64) -> (f64, f64) {
    let (mut sf, mut sg) = (0.0, 0.0);
    for (m, &c) in hist.iter().enumerate() {
        sf += c as f64 * f(m);
        sg += c as f64 * g(m);
    }
    let r = sf / sg;
    let gbar = sg / n;
    let resid = hist
        .iter()
        .enumerate()
        .map(|(m, &c)| c as f64 * (f(m) - r * g(m)).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    (r, (resid / n).sqrt() / gbar)
}

/// Estimates `Zhat(k)` for `k <= k_max` as `s(B)^k / k!` times the probability
/// that the first `k` of a sequence of uniform envelope draws all lie in the
/// region and form a code. Every sample contributes to every `k` (common
/// random numbers), so the series for `Z` and `lambda Z'` is an average of
/// per-sample sums.
pub fn truncated_partition_function<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    k_max: usize,
    mc_per_k: u64,
    rng: &mut R,
) -> Result<PartitionEstimate> {
    if k_max < 1 {
        return domain("k_max must be at least 1");
    }
    check_budget("mc_per_k", mc_per_k)?;
    let seed: u64 = rng.random();
    let shares = split_budget(mc_per_k, REPLICAS);
    let theta_cos = params.theta.cos();
    let hists = run_replicas(seed, REPLICAS, |i, rng| {
        let mut hist = vec![0u64; k_max + 1];
        let mut buf = Vec::with_capacity(k_max);
        for _ in 0..shares[i as usize] {
            hist[code_prefix(region, theta_cos, k_max, &mut buf, rng)] += 1;
        }
        hist
    });
    let mut hist = vec![0u64; k_max + 1];
    for h in &hists {
        hist.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    Ok(series_from_hist(params.lambda, region.envelope_measure(), &hist))
}

fn series_from_hist(lambda: f64, s_env: f64, hist: &[u64]) -> PartitionEstimate {
    let k_max = hist.len() - 1;
    let n_samples: u64 = hist.iter().sum();
    let n = n_samples as f64;
    let ln_fact = |k: usize| log_gamma(k as f64 + 1.0).expect("positive argument");
    // s(B)^k / k! and lambda^k s(B)^k / k!
    let unit: Vec<f64> = (0..=k_max).map(|k| (k as f64 * s_env.ln() - ln_fact(k)).exp()).collect();
    let term: Vec<f64> = (0..=k_max)
        .map(|k| (k as f64 * (lambda * s_env).ln() - ln_fact(k)).exp())
        .collect();
    // survival: number of samples whose prefix reached at least k
    let mut reach = vec![0u64; k_max + 1];
    let mut acc = 0;
    for k in (0..=k_max).rev() {
        acc += hist[k];
        reach[k] = acc;
    }
    let z_hat: Vec<EstimateWithError> = (0..=k_max)
        .map(|k| {
            let p = reach[k] as f64 / n;
            EstimateWithError::new(p, (p * (1.0 - p) / n).sqrt(), n_samples).scale(unit[k])
        })
        .collect();

    let y = |m: usize| term[..=m].iter().sum::<f64>();
    let ky = |m: usize| (0..=m).map(|k| k as f64 * term[k]).sum::<f64>();
    let (z_val, z_var) = {
        let mean = hist.iter().enumerate().map(|(m, &c)| c as f64 * y(m)).sum::<f64>() / n;
        let var = hist
            .iter()
            .enumerate()
            .map(|(m, &c)| c as f64 * (y(m) - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (mean, var)
    };
    let z_se = (z_var / n).sqrt();
    let z = EstimateWithError::new(z_val, z_se, n_samples);
    let log_z = EstimateWithError::new(z_val.ln(), z_se / z_val, n_samples);
    let (alpha, alpha_se) = ratio_from_hist(hist, n, ky, y);
    let size_probs = (0..=k_max)
        .map(|k| {
            let (p, se) = ratio_from_hist(hist, n, |m| if m >= k { term[k] } else { 0.0 }, y);
            EstimateWithError::new(p, se, n_samples)
        })
        .collect();
    let last_term_relative = term[k_max] * reach[k_max] as f64 / n / z_val;
    PartitionEstimate {
        k_max,
        n_samples,
        z_hat,
        z,
        log_z,
        alpha: EstimateWithError::new(alpha, alpha_se, n_samples),
        size_probs,
        last_term_relative,
        truncated: last_term_relative > TRUNCATION_THRESHOLD,
    }
}

/// Empirical law of the configuration size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeDistribution {
    /// `probs[k]` estimates `P(|X| = k)`.
    pub probs: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: u64,
    pub mean: EstimateWithError,
    pub variance: EstimateWithError,
}

pub fn estimate_size_distribution<R: Rng + ?Sized>(
    params: &ModelParams,
    region: &Region,
    budget: u64,
    rng: &mut R,
) -> Result<SizeDistribution> {
    check_budget("budget", budget)?;
    let sizes = observe_model(params, region, budget, rng.random(), |x, _| x.len())?;
    Ok(size_distribution_from(&sizes))
}

pub(crate) fn size_distribution_from(sizes: &[Vec<usize>]) -> SizeDistribution {
    let parts: Vec<&Vec<usize>> = sizes.iter().filter(|p| !p.is_empty()).collect();
    let k_top = parts.iter().flat_map(|p| p.iter()).copied().max().unwrap_or(0);
    let as_f64: Vec<Vec<f64>> = parts.iter().map(|p| p.iter().map(|&k| k as f64).collect()).collect();
    let mean = pooled_mean(&as_f64);
    let bins: Vec<EstimateWithError> = (0..=k_top)
        .map(|k| {
            let ind: Vec<Vec<f64>> = parts
                .iter()
                .map(|p| p.iter().map(|&s| f64::from(u8::from(s == k))).collect())
                .collect();
            pooled_mean(&ind)
        })
        .collect();
    let sq: Vec<Vec<f64>> = as_f64
        .iter()
        .map(|p| {
            let n = p.len() as f64;
            let m = p.iter().sum::<f64>() / n;
            let bessel = if n > 1.0 { n / (n - 1.0) } else { 1.0 };
            p.iter().map(|x| bessel * (x - m).powi(2)).collect()
        })
        .collect();
    let variance = pooled_mean(&sq);
    SizeDistribution {
        probs: bins.iter().map(|b| b.value).collect(),
        stderr: bins.iter().map(|b| b.stderr).collect(),
        n_samples: mean.n_samples,
        mean,
        variance,
    }
}

/// Normalized lens area of two caps of radius `r` at center distance `delta` on `S^2`.
#[cfg(test)]
pub(crate) fn lens_area_s2(r: f64, delta: f64) -> f64 {
    use std::f64::consts::PI;
    if delta >= 2.0 * r {
        return 0.0;
    }
    let phi = ((delta / 2.0).tan() / r.tan()).clamp(-1.0, 1.0).acos();
    let gamma = ((delta / 2.0).sin() / r.sin()).clamp(-1.0, 1.0).asin();
    let beta = PI - 2.0 * gamma;
    (2.0 * beta - 4.0 * phi * r.cos()) / (4.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{is_code, UnitVector};
    use crate::seed::rng_from_seed;
    use std::f64::consts::FRAC_PI_3;

    fn p3(lambda: f64) -> ModelParams {
        ModelParams::new(3, FRAC_PI_3, lambda).unwrap()
    }

    #[test]
    fn small_lambda_alpha() {
        let sphere = Region::full_sphere(3).unwrap();
        let a = estimate_alpha(&p3(0.1), &sphere, 200_000, &mut rng_from_seed(11)).unwrap();
        // Z = 1 + 0.1 + 0.01 * 3/8 + ..., alpha = (0.1 + 2 * 0.00375) / Z
        let oracle = 0.1075 / 1.10375;
        assert!((a.value - oracle).abs() <= 3.0 * a.stderr, "{a:?} vs {oracle}");
        assert!(a.stderr < 1e-3);
    }

    #[test]
    fn first_order_at_tiny_lambda() {
        for (d, theta) in [(3, FRAC_PI_3), (5, 0.7), (8, 1.2)] {
            let p = ModelParams::new(d, theta, 0.01).unwrap();
            let a = estimate_alpha(&p, &Region::full_sphere(d).unwrap(), 50_000, &mut rng_from_seed(d as u64)).unwrap();
            assert!((a.value - 0.01).abs() <= 0.02 * 0.01 + 3.0 * a.stderr, "{d}: {a:?}");
        }
    }

    #[test]
    fn estimators_are_reproducible() {
        let sphere = Region::full_sphere(3).unwrap();
        let a = estimate_alpha(&p3(2.0), &sphere, 5000, &mut rng_from_seed(5)).unwrap();
        let b = estimate_alpha(&p3(2.0), &sphere, 5000, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
        let chain = estimate_alpha(&p3(8.0), &sphere, 2000, &mut rng_from_seed(5)).unwrap();
        let again = estimate_alpha(&p3(8.0), &sphere, 2000, &mut rng_from_seed(5)).unwrap();
        assert_eq!(chain, again);
    }

    #[test]
    fn free_area_with_one_point() {
        let sphere = Region::full_sphere(3).unwrap();
        let code = SphericalCode::new(3, FRAC_PI_3, vec![UnitVector::basis(3, 0).unwrap()]).unwrap();
        let n = 400_000;
        let f = free_area_of(&code, &sphere, n, &mut rng_from_seed(8));
        let exact = 1.0 - 0.25;
        assert!((f - exact).abs() <= 4.0 * (exact * 0.25 / n as f64).sqrt());
        let empty = SphericalCode::empty(3, FRAC_PI_3).unwrap();
        assert_eq!(free_area_of(&empty, &sphere, 100, &mut rng_from_seed(8)), 1.0);
    }

    #[test]
    fn free_area_near_zero_fugacity() {
        let p = ModelParams::new(4, FRAC_PI_3, 1e-4).unwrap();
        let cap = Cap::new(UnitVector::basis(4, 0).unwrap(), 1.0).unwrap();
        let region = Region::cap(cap.clone());
        let f = estimate_free_area(&p, &region, 2000, 200, &mut rng_from_seed(1)).unwrap();
        assert!((f.value - cap.area()).abs() < 1e-3 * cap.area() + 3.0 * f.stderr);
    }

    #[test]
    fn t_samples_respect_invariants() {
        let p = p3(2.0);
        let batch = sample_t_batch(&p, 300, &mut rng_from_seed(4)).unwrap();
        assert_eq!(batch.len(), 300);
        let c = FRAC_PI_3.cos();
        for t in &batch {
            assert!(t.region.blockers.iter().all(|b| b.dot(&t.region.v) < c));
            let m = estimate_t_measure(&t.region, 1000, &mut rng_from_seed(1)).unwrap();
            assert!(m.value <= 0.25 && m.value >= 0.0);
        }
        let tiny = sample_t(&p3(1e-6), &mut rng_from_seed(2)).unwrap();
        assert!(tiny.blockers.is_empty());
        let m = estimate_t_measure(&tiny, 1000, &mut rng_from_seed(3)).unwrap();
        assert!((m.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn t_measure_with_one_grazing_blocker() {
        let theta = FRAC_PI_3;
        let eps = 1e-9;
        let v = UnitVector::basis(3, 0).unwrap();
        let b = UnitVector::new(vec![(theta + eps).cos(), (theta + eps).sin(), 0.0]).unwrap();
        let t = TRegion {
            v,
            theta,
            blockers: vec![b],
        };
        let n = 400_000;
        let m = estimate_t_measure(&t, n, &mut rng_from_seed(9)).unwrap();
        let exact = 0.25 - lens_area_s2(theta, theta);
        assert!((m.value - exact).abs() <= 4.0 * m.stderr, "{m:?} vs {exact}");
    }

    #[test]
    fn lens_formula_limits() {
        let r = 0.8;
        assert!((lens_area_s2(r, 0.0) - (1.0 - r.cos()) / 2.0).abs() < 1e-14);
        assert!(lens_area_s2(r, 2.0 * r).abs() < 1e-14);
    }

    #[test]
    fn series_low_order_terms() {
        let sphere = Region::full_sphere(3).unwrap();
        let pe = truncated_partition_function(&p3(0.5), &sphere, 6, 200_000, &mut rng_from_seed(21)).unwrap();
        assert_eq!(pe.z_hat[0].value, 1.0);
        assert_eq!(pe.z_hat[1].value, 1.0);
        assert!((pe.z_hat[2].value - 0.375).abs() <= 3.0 * pe.z_hat[2].stderr);
        assert!(pe.log_z.value <= 0.5 + 3.0 * pe.log_z.stderr);
        assert!(!pe.truncated);
        let total: f64 = pe.size_probs.iter().map(|p| p.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let cap = Cap::new(UnitVector::basis(3, 2).unwrap(), 1.2).unwrap();
        let region = Region::cap(cap.clone());
        let pc = truncated_partition_function(&p3(0.5), &region, 6, 50_000, &mut rng_from_seed(2)).unwrap();
        assert!((pc.z_hat[1].value - cap.area()).abs() < 1e-15);
    }

    #[test]
    fn truncation_is_flagged() {
        let sphere = Region::full_sphere(3).unwrap();
        let pe = truncated_partition_function(&p3(4.0), &sphere, 2, 10_000, &mut rng_from_seed(3)).unwrap();
        assert!(pe.truncated);
        assert!(matches!(pe.certify(), Err(Error::Truncation { .. })));
    }

    #[test]
    fn exact_sampler_matches_series() {
        let sphere = Region::full_sphere(3).unwrap();
        let p = p3(0.5);
        let pe = truncated_partition_function(&p, &sphere, 8, 400_000, &mut rng_from_seed(31)).unwrap();
        let sd = estimate_size_distribution(&p, &sphere, 200_000, &mut rng_from_seed(32)).unwrap();
        for k in 0..=5 {
            let emp = sd.probs.get(k).copied().unwrap_or(0.0);
            let se = sd.stderr.get(k).copied().unwrap_or(0.0);
            let ser = pe.size_probs[k];
            let tol = 3.0 * (se * se + ser.stderr * ser.stderr).sqrt();
            assert!((emp - ser.value).abs() <= tol.max(1e-12), "k={k}: {emp} vs {ser:?}");
        }
        let mean: f64 = sd.probs.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert!((mean - sd.mean.value).abs() < 1e-12);
    }

    #[test]
    fn tiny_lambda_histogram() {
        let sphere = Region::full_sphere(5).unwrap();
        let p = ModelParams::new(5, 1.0, 0.01).unwrap();
        let sd = estimate_size_distribution(&p, &sphere, 20_000, &mut rng_from_seed(1)).unwrap();
        assert!(sd.probs[0] >= 0.98);
    }

    #[test]
    fn chain_estimates_are_codes() {
        let sphere = Region::full_sphere(3).unwrap();
        let p = p3(20.0);
        let parts = observe_model(&p, &sphere, 500, 77, |x, _| is_code(&x.points, x.theta)).unwrap();
        assert!(parts.iter().flatten().all(|&ok| ok));
        assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), 500);
    }
}
