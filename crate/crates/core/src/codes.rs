//! Explicit code constructions: random sequential adsorption and
//! fugacity-annealed birth-death runs, and their comparison with the bounds.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{covering_lower_bound, jjp_lower_bound};
use crate::error::{domain, Error, Result};
use crate::fmt::real;
use crate::geometry::{dot, is_code, sample_uniform_sphere, SphericalCode, UnitVector};
use crate::hardcap::{bd_mcmc_step, run_replicas, ModelParams, Region};
use crate::seed::rng_from_seed;
use crate::stats::EstimateWithError;

/// Uniform draws allowed to one RSA run.
pub const RSA_MAX_DRAWS: u64 = 200_000_000;

/// Annealing runs at `theta * (1 - ANNEAL_SLACK)` and polishes back to `theta`.
pub const ANNEAL_SLACK: f64 = 0.05;

/// Failed polishes tolerated per configuration size within one restart.
const POLISH_ATTEMPTS_PER_SIZE: usize = 3;

const POLISH_STEPS: usize = 4000;
const POLISH_ROTATIONS: usize = 4000;
const RIESZ_EXPONENT: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rsa,
    Anneal,
}

/// Monte Carlo estimate of the free fraction of the sphere left by a code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationCertificate {
    pub free_fraction: EstimateWithError,
    pub stop_free_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionResult {
    pub code: SphericalCode,
    pub method: Method,
    /// Present iff the method is RSA.
    pub saturation_certificate: Option<SaturationCertificate>,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// Random sequential adsorption: uniform points are inserted while
/// compatible. After `saturation_test_points` consecutive rejections a fresh
/// batch of that many points estimates the free fraction; the run stops once
/// the estimate is below `stop_free_fraction`, and otherwise inserts the first
/// free test point and continues.
pub fn rsa_maximal_code<R: Rng + ?Sized>(
    d: usize,
    theta: f64,
    rng: &mut R,
    saturation_test_points: u64,
    stop_free_fraction: f64,
) -> Result<ConstructionResult> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    if !(theta > 0.0 && theta <= std::f64::consts::PI) {
        return domain(format!("code angle must lie in (0, pi], got {theta}"));
    }
    if !(stop_free_fraction > 0.0 && stop_free_fraction < 1.0) {
        return domain(format!("stop_free_fraction must lie in (0, 1), got {stop_free_fraction}"));
    }
    if saturation_test_points == 0 {
        return domain("saturation_test_points must be at least 1");
    }
    let start = Instant::now();
    let seed: u64 = rng.random();
    let mut rng = rng_from_seed(seed);
    let mut code = SphericalCode::empty(d, theta)?;
    let mut draws = 0u64;
    let mut misses = 0u64;
    let n = saturation_test_points;
    let certificate = loop {
        if draws >= RSA_MAX_DRAWS {
            return Err(Error::BudgetExhausted(format!("RSA used {draws} draws without saturating")));
        }
        if misses < n {
            draws += 1;
            let y = sample_uniform_sphere(d, &mut rng)?;
            if code.admits(&y) {
                code.points.push(y);
                misses = 0;
            } else {
                misses += 1;
            }
            continue;
        }
        let mut first_free = None;
        let mut free = 0u64;
        for _ in 0..n {
            let y = sample_uniform_sphere(d, &mut rng)?;
            if code.admits(&y) {
                free += 1;
                first_free.get_or_insert(y);
            }
        }
        draws += n;
        let p = free as f64 / n as f64;
        if p < stop_free_fraction {
            break SaturationCertificate {
                free_fraction: EstimateWithError::new(p, (p * (1.0 - p) / n as f64).sqrt(), n),
                stop_free_fraction,
            };
        }
        code.points.extend(first_free);
        misses = 0;
    };
    debug_assert!(is_code(&code.points, theta));
    Ok(ConstructionResult {
        code,
        method: Method::Rsa,
        saturation_certificate: Some(certificate),
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
    })
}

/// Birth-death runs over an increasing fugacity schedule, keeping the largest
/// code seen. The chain runs at the slightly smaller angle
/// `theta (1 - ANNEAL_SLACK)` and each new record is polished (repulsion, then
/// a search over rotations for a floating point representation) until it is
/// a code at `theta` itself; optimal codes such as the hexagon sit on the
/// boundary of the feasible set, which a fixed-angle chain never hits.
///
/// Restarts run in parallel with derived seeds; ties go to the lowest restart index.
pub fn anneal_code<R: Rng + ?Sized>(
    d: usize,
    theta: f64,
    lambda_schedule: &[f64],
    sweeps_per_level: u64,
    restarts: u64,
    rng: &mut R,
) -> Result<ConstructionResult> {
    if lambda_schedule.is_empty() || lambda_schedule.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return domain("fugacity schedule must be nonempty, positive and finite");
    }
    if lambda_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return domain("fugacity schedule must be strictly increasing");
    }
    if restarts == 0 {
        return domain("restarts must be at least 1");
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return domain(format!("code angle must lie in (0, pi/2), got {theta}"));
    }
    let start = Instant::now();
    let seed: u64 = rng.random();
    let working = theta * (1.0 - ANNEAL_SLACK);
    let sphere = Region::full_sphere(d)?;
    let runs = run_replicas(seed, restarts, |_, rng| -> Result<SphericalCode> {
        let mut best = SphericalCode::empty(d, theta)?;
        let mut state = SphericalCode::empty(d, working)?;
        let mut failures: Vec<usize> = Vec::new();
        for &lambda in lambda_schedule {
            let params = ModelParams::new(d, working, lambda)?;
            let steps = (lambda.round() as u64).max(1);
            for _ in 0..sweeps_per_level {
                for _ in 0..steps {
                    bd_mcmc_step(&mut state, &params, &sphere, rng);
                }
                let n = state.len();
                if n > best.len() && failures.get(n).copied().unwrap_or(0) < POLISH_ATTEMPTS_PER_SIZE {
                    match polish(&state.points, theta, rng) {
                        Some(points) => {
                            best = SphericalCode {
                                dim: d,
                                theta,
                                points,
                            }
                        }
                        None => {
                            if failures.len() <= n {
                                failures.resize(n + 1, 0);
                            }
                            failures[n] += 1;
                        }
                    }
                }
            }
        }
        Ok(best)
    });
    let mut best: Option<SphericalCode> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.len() > b.len()) {
            best = Some(run);
        }
    }
    Ok(ConstructionResult {
        code: best.expect("at least one restart"),
        method: Method::Anneal,
        saturation_certificate: None,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
    })
}

/// Moves `points` to a code at angle `theta`, if it can.
fn polish<R: Rng + ?Sized>(points: &[UnitVector], theta: f64, rng: &mut R) -> Option<Vec<UnitVector>> {
    if is_code(points, theta) {
        return Some(points.to_vec());
    }
    let mut x: Vec<Vec<f64>> = points.iter().map(|p| p.coords().to_vec()).collect();
    let n = x.len();
    let d = x[0].len();
    // Riesz repulsion with a geometrically shrinking step
    let mut step = 1e-2;
    let shrink = (1e-17f64 / step).powf(1.0 / POLISH_STEPS as f64);
    for _ in 0..POLISH_STEPS {
        let mut forces = vec![vec![0.0; d]; n];
        for i in 0..n {
            for j in i + 1..n {
                let diff: Vec<f64> = (0..d).map(|k| x[i][k] - x[j][k]).collect();
                let r2 = dot(&diff, &diff).max(1e-300);
                let w = r2.powf(-(RIESZ_EXPONENT + 2.0) / 2.0);
                for k in 0..d {
                    forces[i][k] += w * diff[k];
                    forces[j][k] -= w * diff[k];
                }
            }
        }
        for (xi, fi) in x.iter_mut().zip(&mut forces) {
            let radial = dot(xi, fi);
            fi.iter_mut().zip(xi.iter()).for_each(|(f, c)| *f -= radial * c);
        }
        let fmax = forces.iter().map(|f| dot(f, f).sqrt()).fold(0.0, f64::max);
        if fmax == 0.0 {
            break;
        }
        for (xi, fi) in x.iter_mut().zip(&forces) {
            xi.iter_mut().zip(fi).for_each(|(c, f)| *c += step * f / fmax);
            let norm = dot(xi, xi).sqrt();
            xi.iter_mut().for_each(|c| *c /= norm);
        }
        step *= shrink;
    }
    let as_units = |x: &[Vec<f64>]| -> Option<Vec<UnitVector>> {
        x.iter().map(|c| UnitVector::normalize(c.clone()).ok()).collect()
    };
    let polished = as_units(&x)?;
    if is_code(&polished, theta) {
        return Some(polished);
    }
    // Configurations on the feasibility boundary pass or fail by an ulp;
    // random rotations reshuffle the rounding.
    for _ in 0..POLISH_ROTATIONS {
        let a = sample_uniform_sphere(d, rng).ok()?;
        let b = sample_uniform_sphere(d, rng).ok()?;
        let rotated: Vec<Vec<f64>> = x.iter().map(|p| reflect(&reflect(p, a.coords()), b.coords())).collect();
        let cand = as_units(&rotated)?;
        if is_code(&cand, theta) {
            return Some(cand);
        }
    }
    None
}

fn reflect(p: &[f64], a: &[f64]) -> Vec<f64> {
    let t = 2.0 * dot(p, a);
    p.iter().zip(a).map(|(c, v)| c - t * v).collect()
}

/// A construction set against the covering and asymptotic lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsComparison {
    pub d: usize,
    pub theta: f64,
    pub method: Method,
    pub size: usize,
    pub covering_lb: Option<f64>,
    pub ratio_covering: Option<f64>,
    /// Asymptotic in `d`; indicative only at small dimensions.
    pub jjp_lb: Option<f64>,
    pub jjp_asymptotic: bool,
    pub ratio_jjp: Option<f64>,
    pub seed: u64,
    pub wall_time_s: f64,
}

pub fn compare_to_bounds(result: &ConstructionResult) -> Result<BoundsComparison> {
    let (d, theta) = (result.code.dim, result.code.theta);
    let size = result.code.len();
    let covering_lb = covering_lower_bound(d, theta)?.value();
    let jjp_lb = if theta < FRAC_PI_2 { jjp_lower_bound(d, theta)? } else { None };
    Ok(BoundsComparison {
        d,
        theta,
        method: result.method,
        size,
        covering_lb,
        ratio_covering: covering_lb.map(|c| size as f64 / c),
        jjp_lb,
        jjp_asymptotic: true,
        ratio_jjp: jjp_lb.map(|j| size as f64 / j),
        seed: result.seed,
        wall_time_s: result.wall_time_s,
    })
}

pub const CONSTRUCTION_CSV_HEADER: [&str; 8] =
    ["d", "theta", "method", "size", "covering_lb", "ratio", "seed", "wall_time_s"];

/// CSV summary, one row per construction.
pub fn write_construction_csv<W: Write>(rows: &[BoundsComparison], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CONSTRUCTION_CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map(real).unwrap_or_default();
    for r in rows {
        let method = match r.method {
            Method::Rsa => "rsa",
            Method::Anneal => "anneal",
        };
        wtr.write_record([
            r.d.to_string(),
            real(r.theta),
            method.to_string(),
            r.size.to_string(),
            opt(r.covering_lb),
            opt(r.ratio_covering),
            r.seed.to_string(),
            real(r.wall_time_s),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// A construction with its comparison, as persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRecord {
    pub result: ConstructionResult,
    pub comparison: BoundsComparison,
}

pub fn write_construction_json<W: Write>(record: &ConstructionRecord, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, record)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_construction_json<R: std::io::Read>(r: R) -> Result<ConstructionRecord> {
    let rec: ConstructionRecord = serde_json::from_reader(r)?;
    rec.result.code.validate()?;
    Ok(rec)
}

/// Geometric schedule of `levels` fugacities from `lo` to `hi`.
pub fn geometric_schedule(lo: f64, hi: f64, levels: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || levels < 2 {
        return domain(format!("need 0 < lo < hi and at least 2 levels, got {lo}, {hi}, {levels}"));
    }
    let r = (hi / lo).ln() / (levels - 1) as f64;
    Ok((0..levels).map(|i| if i + 1 == levels { hi } else { lo * (r * i as f64).exp() }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rsa_in_the_plane() {
        for s in 0..20 {
            let r = rsa_maximal_code(2, PI / 3.0, &mut rng_from_seed(s), 2000, 0.01).unwrap();
            assert!((3..=6).contains(&r.code.len()), "{}", r.code.len());
            assert!(is_code(&r.code.points, PI / 3.0));
            let c = r.saturation_certificate.unwrap();
            assert!(c.free_fraction.value < 0.01);
        }
    }

    #[test]
    fn rsa_rejects_bad_arguments() {
        let mut rng = rng_from_seed(0);
        assert!(rsa_maximal_code(1, 1.0, &mut rng, 10, 0.1).is_err());
        assert!(rsa_maximal_code(3, 1.0, &mut rng, 10, 0.0).is_err());
        assert!(rsa_maximal_code(3, 1.0, &mut rng, 0, 0.1).is_err());
    }

    #[test]
    fn schedule_validation() {
        let mut rng = rng_from_seed(0);
        assert!(anneal_code(2, 1.0, &[2.0, 1.0], 1, 1, &mut rng).is_err());
        assert!(anneal_code(2, 1.0, &[], 1, 1, &mut rng).is_err());
        assert!(anneal_code(2, 1.0, &[1.0], 1, 0, &mut rng).is_err());
        let s = geometric_schedule(1.0, 1e4, 5).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[4], 1e4);
        assert!((s[2] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn polish_finds_the_hexagon() {
        let theta = PI / 3.0;
        let mut rng = rng_from_seed(1);
        let pts: Vec<UnitVector> = (0..6)
            .map(|i| {
                let a = i as f64 * 1.03 + 0.01 * (i * i) as f64;
                UnitVector::normalize(vec![a.cos(), a.sin()]).unwrap()
            })
            .collect();
        let out = polish(&pts, theta, &mut rng).expect("hexagon reachable");
        assert_eq!(out.len(), 6);
        assert!(is_code(&out, theta));
    }

    #[test]
    fn comparison_in_the_plane() {
        let h = 3f64.sqrt() / 2.0;
        let pts = [(1.0, 0.0), (0.5, h), (-0.5, h), (-1.0, 0.0), (-0.5, -h), (0.5, -h)]
            .iter()
            .map(|&(a, b)| UnitVector::new(vec![a, b]).unwrap())
            .collect();
        let res = ConstructionResult {
            code: SphericalCode::new(2, PI / 3.0, pts).unwrap(),
            method: Method::Anneal,
            saturation_certificate: None,
            wall_time_s: 0.0,
            seed: 3,
        };
        let cmp = compare_to_bounds(&res).unwrap();
        assert!((cmp.ratio_covering.unwrap() - 2.0).abs() < 1e-12);
        let rec = ConstructionRecord { result: res, comparison: cmp.clone() };
        let mut buf = Vec::new();
        write_construction_json(&rec, &mut buf).unwrap();
        assert_eq!(read_construction_json(buf.as_slice()).unwrap(), rec);
        let mut csv_buf = Vec::new();
        write_construction_csv(&[cmp], &mut csv_buf).unwrap();
        let text = String::from_utf8(csv_buf).unwrap();
        assert!(text.starts_with("d,theta,method,size,covering_lb,ratio,seed,wall_time_s\n2,"));
    }
}
