//! Verification harness: each identity or inequality of the model becomes a
//! check with a pass, fail or inconclusive outcome, collected into a report.
//!
//! Statistical checks use a 3 standard error criterion at fixed budgets.
//! Every check draws from its own generator seeded by the master seed and the
//! check name, so the report is a pure function of `(config, master_seed)`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::geometry::{
    angle, cap_area, lens_cover_cap, q_of_theta, sigma, theta_star, Cap, CapSampler, UnitVector,
};
use crate::hardcap::{
    estimate_alpha, estimate_free_area, estimate_size_distribution, estimate_t_measure,
    observe_model_with, run_replicas, sample_t_batch, size_distribution_from, split_budget,
    truncated_partition_function, ModelParams, Region, SamplerKind, TSample, REPLICAS,
};
use crate::seed::{rng_from_seed, seed_for_name};
use crate::stats::{combined_stderr, iid_estimate, mann_kendall, tv_distance, EstimateWithError};

pub const SUITE_VERSION: &str = "1";

/// Below this code angle the cap geometry check is skipped.
pub const CAP_GEOM_MIN_THETA: f64 = 0.05;

/// Allowed angular excess in lens containment.
pub const LENS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Deterministic,
    Statistical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Inconclusive,
}

/// Outcome of one check. For statistical checks `statistic` is the observed
/// discrepancy and `threshold` the allowed one (built from standard errors);
/// for deterministic checks they are an absolute error and its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub status: CheckStatus,
    pub passed: bool,
    /// Absent when the check was skipped.
    pub statistic: Option<f64>,
    pub threshold: Option<f64>,
    /// The claim the check certifies.
    pub claim: String,
    pub details: String,
    pub seed: u64,
}

impl CheckResult {
    fn new(name: &str, kind: CheckKind, statistic: f64, threshold: f64, claim: &str, details: String) -> Self {
        let passed = statistic <= threshold;
        Self {
            name: name.to_string(),
            kind,
            status: if passed { CheckStatus::Pass } else { CheckStatus::Fail },
            passed,
            statistic: Some(statistic),
            threshold: Some(threshold),
            claim: claim.to_string(),
            details,
            seed: 0,
        }
    }

    /// A check that could not run at these parameters; reported as inconclusive.
    fn skipped(name: &str, kind: CheckKind, claim: &str, why: &str, details: String) -> Self {
        let mut r = Self::new(name, kind, 0.0, 0.0, claim, details).inconclusive(&format!("skipped: {why}"));
        r.statistic = None;
        r.threshold = None;
        r
    }

    fn inconclusive(mut self, why: &str) -> Self {
        self.status = CheckStatus::Inconclusive;
        self.passed = false;
        self.details = format!("{why}; {}", self.details);
        self
    }

    fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Part of the name before any bracketed parameters.
    pub fn base_name(&self) -> &str {
        self.name.split('[').next().unwrap_or(&self.name)
    }
}

// Check budgets.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFreeBudget {
    pub alpha_samples: u64,
    pub outer: u64,
    pub test_points: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapGeomBudget {
    pub outer: u64,
    pub inner: u64,
    pub t_regions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesBudget {
    pub k_max: usize,
    pub mc: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TBudget {
    pub t_samples: u64,
    pub series_mc: u64,
    pub measure_points: u64,
    pub alpha_samples: u64,
}

/// Budgets for the whole suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub alpha_free: AlphaFreeBudget,
    pub variance_samples: u64,
    pub cap_geom: CapGeomBudget,
    pub lens_points: u64,
    pub sampler_samples: u64,
    pub series: SeriesBudget,
    pub theorem3_samples: u64,
    pub monotone_samples: u64,
    pub t: TBudget,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            alpha_free: AlphaFreeBudget {
                alpha_samples: 200_000,
                outer: 100_000,
                test_points: 64,
            },
            variance_samples: 1_000_000,
            cap_geom: CapGeomBudget {
                outer: 4_000,
                inner: 1_000,
                t_regions: 4_000,
            },
            lens_points: 100_000,
            sampler_samples: 100_000,
            series: SeriesBudget { k_max: 12, mc: 200_000 },
            theorem3_samples: 200_000,
            monotone_samples: 100_000,
            t: TBudget {
                t_samples: 2_000,
                series_mc: 10_000,
                measure_points: 2_000,
                alpha_samples: 200_000,
            },
        }
    }
}

impl SuiteConfig {
    /// Roughly a tenth of the default budgets, for smoke runs.
    pub fn quick() -> Self {
        Self {
            alpha_free: AlphaFreeBudget {
                alpha_samples: 20_000,
                outer: 10_000,
                test_points: 32,
            },
            variance_samples: 100_000,
            cap_geom: CapGeomBudget {
                outer: 1_000,
                inner: 500,
                t_regions: 1_000,
            },
            lens_points: 10_000,
            sampler_samples: 20_000,
            series: SeriesBudget { k_max: 12, mc: 20_000 },
            theorem3_samples: 20_000,
            monotone_samples: 10_000,
            t: TBudget {
                t_samples: 300,
                series_mc: 10_000,
                measure_points: 1_000,
                alpha_samples: 20_000,
            },
        }
    }
}

fn fmt_est(e: &EstimateWithError) -> String {
    format!("{:.6} +- {:.2e}", e.value, e.stderr)
}

/// `alpha = lambda F` on the whole sphere.
pub fn check_alpha_free_area<R: Rng + ?Sized>(params: &ModelParams, budget: &AlphaFreeBudget, rng: &mut R) -> Result<CheckResult> {
    check_alpha_free_area_pair(params, params, budget, rng)
}

/// As [`check_alpha_free_area`], with separate parameters for the two
/// estimators (a deliberate mismatch must make the check fail).
pub fn check_alpha_free_area_pair<R: Rng + ?Sized>(
    alpha_params: &ModelParams,
    free_params: &ModelParams,
    budget: &AlphaFreeBudget,
    rng: &mut R,
) -> Result<CheckResult> {
    let sphere = Region::full_sphere(alpha_params.d)?;
    let free_sphere = Region::full_sphere(free_params.d)?;
    let alpha = estimate_alpha(alpha_params, &sphere, budget.alpha_samples, rng)?;
    let free = estimate_free_area(free_params, &free_sphere, budget.outer, budget.test_points, rng)?;
    let lambda = alpha_params.lambda;
    let stat = (alpha.value - lambda * free.value).abs();
    let thr = 3.0 * combined_stderr(&[alpha.stderr, lambda * free.stderr]);
    Ok(CheckResult::new(
        &format!("check_alpha_free_area[d={},lambda={}]", alpha_params.d, lambda),
        CheckKind::Statistical,
        stat,
        thr,
        "expected size equals fugacity times free area",
        format!("alpha = {}, lambda F = {}", fmt_est(&alpha), fmt_est(&free.scale(lambda))),
    ))
}

/// `lambda alpha'(lambda) = var |X|`, with a central difference for `alpha'`.
///
/// The difference quotient has bias `lambda dl^2 alpha'''/6`; `alpha'''` is
/// estimated from a third difference over `lambda +- dl, lambda +- 2 dl` and
/// padded by 3 of its own standard errors. When `dl >= lambda/2` or the bias
/// bound exceeds the noise allowance the outcome is inconclusive.
pub fn check_variance_identity<R: Rng + ?Sized>(params: &ModelParams, dlambda: f64, samples: u64, rng: &mut R) -> Result<CheckResult> {
    let lambda = params.lambda;
    if !(dlambda > 0.0) {
        return domain(format!("dlambda must be positive, got {dlambda}"));
    }
    let name = format!("check_variance_identity[d={},lambda={},dlambda={}]", params.d, lambda, dlambda);
    let claim = "fugacity times the derivative of alpha equals the variance of the size";
    if dlambda >= lambda / 2.0 {
        return Ok(CheckResult::skipped(
            &name,
            CheckKind::Statistical,
            claim,
            "dlambda >= lambda/2, difference bias dominates",
            format!("dlambda = {dlambda}, lambda = {lambda}"),
        ));
    }
    let sphere = Region::full_sphere(params.d)?;
    let dist = estimate_size_distribution(params, &sphere, samples, rng)?;
    let mut alpha_at = |l: f64| estimate_alpha(&params.with_lambda(l)?, &sphere, samples, rng);
    let a_p1 = alpha_at(lambda + dlambda)?;
    let a_m1 = alpha_at(lambda - dlambda)?;
    let a_p2 = alpha_at(lambda + 2.0 * dlambda)?;
    let a_m2 = alpha_at(lambda - 2.0 * dlambda)?;

    let deriv = (a_p1.value - a_m1.value) / (2.0 * dlambda);
    let deriv_se = combined_stderr(&[a_p1.stderr, a_m1.stderr]) / (2.0 * dlambda);
    let third = (a_p2.value - 2.0 * a_p1.value + 2.0 * a_m1.value - a_m2.value) / (2.0 * dlambda.powi(3));
    let third_se = combined_stderr(&[a_p2.stderr, 2.0 * a_p1.stderr, 2.0 * a_m1.stderr, a_m2.stderr]) / (2.0 * dlambda.powi(3));
    let bias = lambda * dlambda * dlambda / 6.0 * (third.abs() + 3.0 * third_se);

    let lhs = lambda * deriv;
    let noise = 3.0 * combined_stderr(&[lambda * deriv_se, dist.variance.stderr]);
    let stat = (lhs - dist.variance.value).abs();
    let res = CheckResult::new(
        &name,
        CheckKind::Statistical,
        stat,
        noise + bias,
        claim,
        format!(
            "lambda alpha' = {:.6} +- {:.2e}, var = {}, bias bound = {:.2e}",
            lhs,
            lambda * deriv_se,
            fmt_est(&dist.variance),
            bias
        ),
    );
    if bias > noise {
        return Ok(res.inconclusive("bias bound exceeds the noise allowance"));
    }
    Ok(res)
}

/// Nested Monte Carlo estimate of `E s(C_theta(u) cap A)` for `u` uniform in the cap `A`.
fn cap_self_overlap(region: &Region, theta: f64, s_theta: f64, outer: u64, inner: u64, seed: u64) -> EstimateWithError {
    let shares = split_budget(outer, REPLICAS);
    let vals: Vec<f64> = run_replicas(seed, REPLICAS, |i, rng| {
        (0..shares[i as usize])
            .map(|_| {
                let u = region.sample_envelope(rng);
                let around = CapSampler::new(Cap::new(u, theta).expect("valid cap"));
                let hits = (0..inner).filter(|_| region.contains(&around.sample(rng))).count();
                s_theta * hits as f64 / inner as f64
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    iid_estimate(&vals)
}

/// `E s(C_theta(u) cap A) <= 2 s_d(q(theta))` for `u` uniform in `A`, with `A`
/// a cap `C_theta(x)` or a random set `T` (at fugacity `lambda`). Returns one
/// result per kind of `A`.
pub fn check_cap_geom<R: Rng + ?Sized>(
    d: usize,
    theta: f64,
    lambda: f64,
    budget: &CapGeomBudget,
    rng: &mut R,
) -> Result<Vec<CheckResult>> {
    let claim = "mean overlap of a code cap with the region is at most 2 s_d(q(theta))";
    let names = [format!("check_cap_geom[d={d},A=cap]"), format!("check_cap_geom[d={d},A=T]")];
    if theta < CAP_GEOM_MIN_THETA {
        return Ok(names
            .iter()
            .map(|n| CheckResult::skipped(n, CheckKind::Statistical, claim, "degenerate small angle", format!("theta = {theta}")))
            .collect());
    }
    let bound = 2.0 * cap_area(d, q_of_theta(theta)?)?;
    let s_theta = cap_area(d, theta)?;
    let cap_region = Region::cap(Cap::new(UnitVector::basis(d, 0)?, theta)?);
    let cap_est = cap_self_overlap(&cap_region, theta, s_theta, budget.outer.max(2), budget.inner, rng.random());
    let params = ModelParams::new(d, theta, lambda)?;
    let ts = sample_t_batch(&params, budget.t_regions, rng)?;
    let t_est = t_overlap(&ts, s_theta, budget.inner, rng.random());

    let mut out = Vec::new();
    out.push(CheckResult::new(
        &names[0],
        CheckKind::Statistical,
        cap_est.value - bound,
        3.0 * cap_est.stderr,
        claim,
        format!("estimate = {}, bound = {:.6}", fmt_est(&cap_est), bound),
    ));
    out.push(match t_est {
        Some(e) => CheckResult::new(
            &names[1],
            CheckKind::Statistical,
            e.value - bound,
            3.0 * e.stderr,
            claim,
            format!("estimate = {}, bound = {:.6}, lambda = {lambda}, regions = {}", fmt_est(&e), bound, e.n_samples),
        ),
        None => CheckResult::skipped(&names[1], CheckKind::Statistical, claim, "every sampled T was empty", String::new()),
    });
    Ok(out)
}

/// One uniform point `u` of each nonempty `T`, then the fraction of `C_theta(u)` inside `T`.
fn t_overlap(ts: &[TSample], s_theta: f64, inner: u64, seed: u64) -> Option<EstimateWithError> {
    const FIND_ATTEMPTS: u64 = 100_000;
    let chunk = ts.len().div_ceil(REPLICAS as usize).max(1);
    let vals: Vec<f64> = run_replicas(seed, REPLICAS, |i, rng| {
        let lo = (i as usize * chunk).min(ts.len());
        let hi = ((i as usize + 1) * chunk).min(ts.len());
        let mut out = Vec::new();
        for t in &ts[lo..hi] {
            let region = match Region::t_region(t.region.clone()) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let Some(u) = (0..FIND_ATTEMPTS).find_map(|_| region.propose(rng)) else {
                continue;
            };
            let around = CapSampler::new(Cap::new(u, t.region.theta).expect("valid cap"));
            let hits = (0..inner).filter(|_| region.contains(&around.sample(rng))).count();
            out.push(s_theta * hits as f64 / inner as f64);
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();
    (!vals.is_empty()).then(|| iid_estimate(&vals))
}

/// Points of the lens `C_theta(u) cap C_tau(x)`, `angle(u, x) = tau`, all lie
/// within `sigma(theta, tau)` of the covering cap's center.
pub fn check_lens_containment<R: Rng + ?Sized>(d: usize, theta: f64, tau: f64, n_points: u64, rng: &mut R) -> Result<CheckResult> {
    let name = format!("check_lens_containment[d={d},tau={tau}]");
    let claim = "the lens of a theta-cap and a tau-cap lies in a cap of radius sigma(theta, tau)";
    let lo = theta_star(theta)?;
    if tau < lo || tau > theta {
        return Ok(CheckResult::skipped(
            &name,
            CheckKind::Deterministic,
            claim,
            "tau outside the tested range",
            format!("tau range [{lo}, {theta}]"),
        ));
    }
    if n_points == 0 {
        return domain("n_points must be at least 1");
    }
    let u = UnitVector::basis(d, 0)?;
    let mut xc = vec![0.0; d];
    xc[0] = tau.cos();
    xc[1] = tau.sin();
    let x = UnitVector::normalize(xc)?;
    let cover = lens_cover_cap(&u, &x, theta, tau)?;
    let s = sigma(theta, tau)?;
    let small = CapSampler::new(Cap::new(x, tau)?);
    let cu = theta.cos();
    let mut kept = 0u64;
    let mut violations = 0u64;
    let mut worst = f64::NEG_INFINITY;
    let mut tries = 0u64;
    while kept < n_points {
        tries += 1;
        let y = small.sample(rng);
        if u.dot(&y) < cu {
            continue;
        }
        kept += 1;
        let excess = angle(&cover.center, &y)? - s;
        worst = worst.max(excess);
        if excess > LENS_TOLERANCE {
            violations += 1;
        }
    }
    let mut r = CheckResult::new(
        &name,
        CheckKind::Deterministic,
        worst,
        LENS_TOLERANCE,
        claim,
        format!("sigma = {s:.12}, points = {kept}, draws = {tries}, violations = {violations}"),
    );
    r.passed = violations == 0;
    r.status = if r.passed { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(r)
}

/// Size histograms from the exact sampler and the chain at the same
/// parameters; passes iff their total variation distance is at most `max_tv`.
pub fn check_exact_vs_mcmc<R: Rng + ?Sized>(params: &ModelParams, samples: u64, max_tv: f64, rng: &mut R) -> Result<CheckResult> {
    let sphere = Region::full_sphere(params.d)?;
    let exact = observe_model_with(SamplerKind::Exact, params, &sphere, samples, rng.random(), |x, _| x.len())?;
    let chain = observe_model_with(SamplerKind::Chain, params, &sphere, samples, rng.random(), |x, _| x.len())?;
    let pe = size_distribution_from(&exact);
    let pc = size_distribution_from(&chain);
    let tv = tv_distance(&pe.probs, &pc.probs);
    Ok(CheckResult::new(
        &format!("check_exact_vs_mcmc[d={},lambda={}]", params.d, params.lambda),
        CheckKind::Statistical,
        tv,
        max_tv,
        "the birth-death chain and the rejection sampler target the same law",
        format!("mean exact = {}, mean chain = {}, samples = {samples}", fmt_est(&pe.mean), fmt_est(&pc.mean)),
    ))
}

/// `log Z <= lambda s(A)` from the truncated series.
pub fn check_log_z_bound<R: Rng + ?Sized>(params: &ModelParams, region: &Region, budget: &SeriesBudget, rng: &mut R) -> Result<CheckResult> {
    let pe = truncated_partition_function(params, region, budget.k_max, budget.mc, rng)?;
    let s = region
        .measure()
        .ok_or_else(|| crate::Error::Invalid("log Z bound needs a region of known measure".into()))?;
    let label = match region {
        Region::FullSphere { .. } => "sphere".to_string(),
        Region::Cap(c) => format!("cap{}", c.cap().psi),
        Region::T { .. } => "T".to_string(),
    };
    let r = CheckResult::new(
        &format!("check_log_z_bound[d={},lambda={},A={label}]", params.d, params.lambda),
        CheckKind::Statistical,
        pe.log_z.value - params.lambda * s,
        3.0 * pe.log_z.stderr,
        "log of the partition function is at most lambda s(A)",
        format!(
            "log Z = {}, lambda s(A) = {:.6}, last term = {:.2e}",
            fmt_est(&pe.log_z),
            params.lambda * s,
            pe.last_term_relative
        ),
    );
    if pe.truncated {
        return Ok(r.inconclusive("series truncated"));
    }
    Ok(r)
}

/// The identity `Zhat(n) = P[|X| = n] Z lambda^-n` at `lambda = 1/s_d(q(theta))`,
/// `n = 0..=3`, with the size law from the sampler and `Z` from the series.
pub fn check_theorem3_ingredients<R: Rng + ?Sized>(
    d: usize,
    theta: f64,
    samples: u64,
    series: &SeriesBudget,
    rng: &mut R,
) -> Result<CheckResult> {
    let lambda = 1.0 / cap_area(d, q_of_theta(theta)?)?;
    let params = ModelParams::new(d, theta, lambda)?;
    let sphere = Region::full_sphere(d)?;
    let dist = estimate_size_distribution(&params, &sphere, samples, rng)?;
    let pe = truncated_partition_function(&params, &sphere, series.k_max, series.mc, rng)?;
    let z = pe.z;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for n in 0..=3usize {
        let p = dist.probs.get(n).copied().unwrap_or(0.0);
        let p_se = dist.stderr.get(n).copied().unwrap_or(0.0);
        let scale = z.value / lambda.powi(n as i32);
        let lhs = p * scale;
        let lhs_se = scale * p * combined_stderr(&[p_se / p.max(f64::MIN_POSITIVE), z.stderr / z.value]);
        let rhs = pe.z_hat[n];
        let se = combined_stderr(&[lhs_se, rhs.stderr]);
        let score = if se > 0.0 {
            (lhs - rhs.value).abs() / se
        } else if (lhs - rhs.value).abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(score);
        parts.push(format!("n={n}: {:.6} vs {:.6}", lhs, rhs.value));
    }
    let r = CheckResult::new(
        &format!("check_theorem3_ingredients[d={d}]"),
        CheckKind::Statistical,
        worst,
        3.0,
        "canonical partition functions equal size probabilities times Z over lambda^n",
        format!("lambda = {lambda:.6}, {}; statistic in standard errors", parts.join(", ")),
    );
    if pe.truncated {
        return Ok(r.inconclusive("series truncated"));
    }
    Ok(r)
}

/// Trend of `alpha` over increasing fugacities. Passes unless some
/// consecutive decrease exceeds 3 combined standard errors; the Mann-Kendall
/// score is reported but cannot certify strict monotonicity.
pub fn check_alpha_monotone<R: Rng + ?Sized>(d: usize, theta: f64, lambdas: &[f64], samples: u64, rng: &mut R) -> Result<CheckResult> {
    let sphere = Region::full_sphere(d)?;
    let mut ests = Vec::new();
    for &l in lambdas {
        ests.push(estimate_alpha(&ModelParams::new(d, theta, l)?, &sphere, samples, rng)?);
    }
    let worst = ests
        .windows(2)
        .map(|w| (w[0].value - w[1].value) / combined_stderr(&[w[0].stderr, w[1].stderr]))
        .fold(f64::NEG_INFINITY, f64::max);
    let (s, z) = mann_kendall(&ests.iter().map(|e| e.value).collect::<Vec<_>>());
    Ok(CheckResult::new(
        &format!("check_alpha_monotone[d={d}]"),
        CheckKind::Statistical,
        worst,
        3.0,
        "alpha increases with the fugacity (a trend test, not strictness)",
        format!(
            "alpha = [{}], Mann-Kendall S = {s}, z = {z:.3}",
            ests.iter().map(fmt_est).collect::<Vec<_>>().join(", ")
        ),
    ))
}

/// Per-`T` series results for the two-part experiment.
struct TSeries {
    inv_z: Vec<f64>,
    alpha_t: Vec<f64>,
    inside: Vec<f64>,
}

fn t_series(params: &ModelParams, budget: &TBudget, k_max: usize, rng: &mut impl Rng) -> Result<TSeries> {
    let ts = sample_t_batch(params, budget.t_samples, rng)?;
    let seeds: Vec<u64> = ts.iter().map(|_| rng.random()).collect();
    let mut out = TSeries {
        inv_z: Vec::new(),
        alpha_t: Vec::new(),
        inside: Vec::new(),
    };
    for (t, seed) in ts.iter().zip(seeds) {
        let region = Region::t_region(t.region.clone())?;
        let pe = truncated_partition_function(params, &region, k_max, budget.series_mc, &mut rng_from_seed(seed))?;
        out.inv_z.push(1.0 / pe.z.value);
        out.alpha_t.push(pe.alpha.value);
        out.inside.push(t.inside as f64);
    }
    Ok(out)
}

/// The two spatial Markov identities on the sphere:
/// `alpha = lambda E[1/Z_T]` and `alpha = E[alpha_T] / s_d(theta)`.
pub fn check_spatial_markov<R: Rng + ?Sized>(params: &ModelParams, budget: &TBudget, k_max: usize, rng: &mut R) -> Result<Vec<CheckResult>> {
    let sphere = Region::full_sphere(params.d)?;
    let alpha = estimate_alpha(params, &sphere, budget.alpha_samples, rng)?;
    let mut local = rng_from_seed(rng.random());
    let ts = t_series(params, budget, k_max, &mut local)?;
    let s_theta = cap_area(params.d, params.theta)?;
    let free = iid_estimate(&ts.inv_z).scale(params.lambda);
    let local_alpha = iid_estimate(&ts.alpha_t).scale(1.0 / s_theta);
    let inside = iid_estimate(&ts.inside).scale(1.0 / s_theta);
    let tag = format!("d={},lambda={}", params.d, params.lambda);
    Ok(vec![
        CheckResult::new(
            &format!("check_spatial_markov_free[{tag}]"),
            CheckKind::Statistical,
            (alpha.value - free.value).abs(),
            3.0 * combined_stderr(&[alpha.stderr, free.stderr]),
            "alpha equals lambda times the mean inverse partition function of T",
            format!("alpha = {}, lambda E[1/Z_T] = {}", fmt_est(&alpha), fmt_est(&free)),
        ),
        CheckResult::new(
            &format!("check_spatial_markov_cap[{tag}]"),
            CheckKind::Statistical,
            (alpha.value - local_alpha.value).abs(),
            3.0 * combined_stderr(&[alpha.stderr, local_alpha.stderr]),
            "alpha equals the mean expected size on T over s_d(theta)",
            format!(
                "alpha = {}, E[alpha_T]/s = {}, E[|X cap C|]/s = {}",
                fmt_est(&alpha),
                fmt_est(&local_alpha),
                fmt_est(&inside)
            ),
        ),
    ])
}

/// `alpha >= lambda exp(-lambda E[s(T)])` on the sphere.
pub fn check_alpha_lower_bound<R: Rng + ?Sized>(params: &ModelParams, budget: &TBudget, rng: &mut R) -> Result<CheckResult> {
    let sphere = Region::full_sphere(params.d)?;
    let alpha = estimate_alpha(params, &sphere, budget.alpha_samples, rng)?;
    let ts = sample_t_batch(params, budget.t_samples, rng)?;
    let mut measures = Vec::with_capacity(ts.len());
    for t in &ts {
        measures.push(estimate_t_measure(&t.region, budget.measure_points, rng)?.value);
    }
    let m = iid_estimate(&measures);
    let l = params.lambda;
    let lb = l * (-l * m.value).exp();
    let lb_se = lb * l * m.stderr;
    Ok(CheckResult::new(
        &format!("check_alpha_lower_bound[d={},lambda={}]", params.d, l),
        CheckKind::Statistical,
        lb - alpha.value,
        3.0 * combined_stderr(&[alpha.stderr, lb_se]),
        "alpha is at least lambda exp(-lambda E s(T))",
        format!("alpha = {}, lower bound = {lb:.6} +- {lb_se:.2e}, E s(T) = {}", fmt_est(&alpha), fmt_est(&m)),
    ))
}

/// Report summary counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite_version: String,
    pub master_seed: u64,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl Report {
    pub fn from_checks(master_seed: u64, mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.name.cmp(&b.name));
        let count = |s| checks.iter().filter(|c| c.status == s).count();
        let summary = Summary {
            passed: count(CheckStatus::Pass),
            failed: count(CheckStatus::Fail),
            inconclusive: count(CheckStatus::Inconclusive),
        };
        Self {
            suite_version: SUITE_VERSION.to_string(),
            master_seed,
            checks,
            summary,
        }
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

/// Names of the check families in the default suite.
pub const CHECK_FAMILIES: [&str; 10] = [
    "check_alpha_free_area",
    "check_alpha_lower_bound",
    "check_alpha_monotone",
    "check_cap_geom",
    "check_exact_vs_mcmc",
    "check_lens_containment",
    "check_log_z_bound",
    "check_spatial_markov",
    "check_theorem3_ingredients",
    "check_variance_identity",
];

type Job<'a> = Box<dyn Fn(&mut crate::seed::RandomSource) -> Result<Vec<CheckResult>> + 'a>;

/// Runs every check of the default suite.
pub fn run_all(config: &SuiteConfig, master_seed: u64) -> Result<Report> {
    run_selected(config, master_seed, &[])
}

/// Runs the checks whose family name is in `only` (all when empty). Each
/// check job is seeded from `(master_seed, job name)`.
pub fn run_selected(config: &SuiteConfig, master_seed: u64, only: &[String]) -> Result<Report> {
    let theta = PI / 3.0;
    let p = |d: usize, l: f64| ModelParams::new(d, theta, l);
    let mut jobs: Vec<(String, &str, Job)> = Vec::new();

    for d in [3usize, 4] {
        for l in [0.5, 2.0] {
            jobs.push((
                format!("alpha_free_area/{d}/{l}"),
                "check_alpha_free_area",
                Box::new(move |r| Ok(vec![check_alpha_free_area(&p(d, l)?, &config.alpha_free, r)?])),
            ));
            jobs.push((
                format!("alpha_lower_bound/{d}/{l}"),
                "check_alpha_lower_bound",
                Box::new(move |r| Ok(vec![check_alpha_lower_bound(&p(d, l)?, &config.t, r)?])),
            ));
        }
    }
    jobs.push((
        "variance_identity".into(),
        "check_variance_identity",
        Box::new(|r| Ok(vec![check_variance_identity(&p(3, 1.0)?, 0.1, config.variance_samples, r)?])),
    ));
    for d in [3usize, 8] {
        jobs.push((
            format!("cap_geom/{d}"),
            "check_cap_geom",
            Box::new(move |r| {
                let lambda = crate::bounds::default_lambda_log(d, theta)?.exp();
                check_cap_geom(d, theta, lambda, &config.cap_geom, r)
            }),
        ));
    }
    for d in [3usize, 4, 8] {
        let ts = theta_star(theta)?;
        for tau in [theta, 0.5 * (ts + theta)] {
            jobs.push((
                format!("lens/{d}/{tau}"),
                "check_lens_containment",
                Box::new(move |r| Ok(vec![check_lens_containment(d, theta, tau, config.lens_points, r)?])),
            ));
        }
    }
    for (l, tv) in [(2.0, 0.02), (0.1, 0.01)] {
        jobs.push((
            format!("exact_vs_mcmc/{l}"),
            "check_exact_vs_mcmc",
            Box::new(move |r| Ok(vec![check_exact_vs_mcmc(&p(3, l)?, config.sampler_samples, tv, r)?])),
        ));
    }
    for l in [0.5, 1.0, 2.0] {
        jobs.push((
            format!("log_z/{l}"),
            "check_log_z_bound",
            Box::new(move |r| Ok(vec![check_log_z_bound(&p(3, l)?, &Region::full_sphere(3)?, &config.series, r)?])),
        ));
    }
    jobs.push((
        "log_z/cap".into(),
        "check_log_z_bound",
        Box::new(|r| {
            let cap = Region::cap(Cap::new(UnitVector::basis(3, 2)?, 1.2)?);
            Ok(vec![check_log_z_bound(&p(3, 2.0)?, &cap, &config.series, r)?])
        }),
    ));
    jobs.push((
        "theorem3".into(),
        "check_theorem3_ingredients",
        Box::new(|r| Ok(vec![check_theorem3_ingredients(3, theta, config.theorem3_samples, &config.series, r)?])),
    ));
    jobs.push((
        "alpha_monotone".into(),
        "check_alpha_monotone",
        Box::new(|r| Ok(vec![check_alpha_monotone(3, theta, &[0.5, 1.0, 2.0, 4.0], config.monotone_samples, r)?])),
    ));
    jobs.push((
        "spatial_markov".into(),
        "check_spatial_markov",
        Box::new(|r| check_spatial_markov(&p(3, 0.5)?, &config.t, config.series.k_max, r)),
    ));

    let mut checks = Vec::new();
    for (key, family, job) in &jobs {
        if !only.is_empty() && !only.iter().any(|o| o == family) {
            continue;
        }
        let seed = seed_for_name(master_seed, key);
        let mut rng = rng_from_seed(seed);
        checks.extend(job(&mut rng)?.into_iter().map(|c| c.with_seed(seed)));
    }
    Ok(Report::from_checks(master_seed, checks))
}
