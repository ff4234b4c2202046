//! Closed-form bounds on kissing numbers and spherical codes.
//!
//! Everything is evaluated in log space: `(2/sqrt 3)^d` alone overflows an
//! `f64` near `d = 4900`, and cap areas underflow long before that. Bounds
//! that are only asymptotic statements (a dropped `1 + o(1)` factor) are
//! flagged as such wherever they are reported.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, LN_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fmt::real;
use crate::geometry::{ln_cap_area, q_of_theta};
use crate::numerics::{lambert_w0_of_exp, Tolerance};

/// Kabatiansky-Levenshtein exponent for kissing numbers, `K(d) <= 2^{0.4041 d}`.
/// Known only to the four digits stored here.
pub const KL_KISSING_EXPONENT: f64 = 0.4041;

fn check(d: usize, theta: f64) -> Result<()> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return domain(format!("code angle must lie in (0, pi/2), got {theta}"));
    }
    Ok(())
}

fn exp_if_finite(l: f64) -> Option<f64> {
    let v = l.exp();
    (v.is_finite() && v > 0.0).then_some(v)
}

/// `A(d, theta) >= 1/s_d(theta)` together with its large-`d` form
/// `sqrt(2 pi d) cos(theta) / sin^{d-1}(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub log_value: f64,
    pub log_asymptotic: f64,
}

impl CoveringBound {
    /// The bound itself, `None` when it overflows.
    pub fn value(&self) -> Option<f64> {
        exp_if_finite(self.log_value)
    }

    pub fn asymptotic(&self) -> Option<f64> {
        exp_if_finite(self.log_asymptotic)
    }
}

pub fn covering_lower_bound(d: usize, theta: f64) -> Result<CoveringBound> {
    check(d, theta)?;
    let df = d as f64;
    Ok(CoveringBound {
        log_value: -ln_cap_area(d, theta)?,
        log_asymptotic: 0.5 * (2.0 * PI * df).ln() + theta.cos().ln() - (df - 1.0) * theta.sin().ln(),
    })
}

/// `c_theta = log(sin theta / sin q(theta))`.
pub fn c_of_theta(theta: f64) -> Result<f64> {
    let q = q_of_theta(theta)?;
    let first = (theta.sin() / q.sin()).ln();
    let second = c_of_theta_radical(theta);
    if (first - second).abs() > 1e-10 {
        return Err(Error::NumericalFailure(format!(
            "the two forms of c_theta disagree at theta={theta}: {first} vs {second}"
        )));
    }
    Ok(first)
}

/// The radical form `log(sin^2 theta / sqrt((1 - cos theta)^2 (1 + 2 cos theta)))`.
pub fn c_of_theta_radical(theta: f64) -> f64 {
    let c = theta.cos();
    let s = theta.sin();
    (s * s / ((1.0 - c) * (1.0 - c) * (1.0 + 2.0 * c)).sqrt()).ln()
}

/// `log` of the finite-`d` evaluation of `c_theta d / s_d(theta)`. Asymptotic.
pub fn jjp_lower_bound_log(d: usize, theta: f64) -> Result<f64> {
    let cov = covering_lower_bound(d, theta)?;
    Ok(cov.log_value + (c_of_theta(theta)? * d as f64).ln())
}

/// `c_theta d / s_d(theta)`, `None` on overflow. Asymptotic.
pub fn jjp_lower_bound(d: usize, theta: f64) -> Result<Option<f64>> {
    Ok(exp_if_finite(jjp_lower_bound_log(d, theta)?))
}

/// `sqrt(3 pi / 8) log(3 / (2 sqrt 2))`, about 0.0639.
pub fn kissing_constant() -> f64 {
    (3.0 * PI / 8.0).sqrt() * (3.0 / (2.0 * 2f64.sqrt())).ln()
}

/// Logs of the four kissing-number bounds, all with `1 + o(1)` factors dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KissingBounds {
    pub d: usize,
    pub classical_lb_log: f64,
    pub jjp_lb_log: f64,
    pub rankin_ub_log: f64,
    pub kl_ub_log: f64,
}

pub fn kissing_bounds(d: usize) -> Result<KissingBounds> {
    if d < 2 {
        return domain(format!("dimension must be >= 2, got {d}"));
    }
    let df = d as f64;
    let base = df * (2.0 / 3f64.sqrt()).ln();
    Ok(KissingBounds {
        d,
        classical_lb_log: 0.5 * (3.0 * PI * df / 8.0).ln() + base,
        jjp_lb_log: kissing_constant().ln() + 1.5 * df.ln() + base,
        rankin_ub_log: 0.5 * (PI / 8.0).ln() + 1.5 * df.ln() + 0.5 * df * LN_2,
        kl_ub_log: KL_KISSING_EXPONENT * df * LN_2,
    })
}

/// The crossing point of the two lower bounds on `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZStar {
    pub lambda_log: f64,
    pub z_star: f64,
    /// `log(lambda e^{-z*})`
    pub alpha_lb_log: f64,
}

impl ZStar {
    pub fn alpha_lb(&self) -> Option<f64> {
        exp_if_finite(self.alpha_lb_log)
    }
}

/// `z* = W(lambda s_d(theta) e^{2 lambda s_d(q(theta))})` and `alpha >= lambda e^{-z*}`.
pub fn z_star(lambda: f64, d: usize, theta: f64) -> Result<ZStar> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("fugacity must be positive and finite, got {lambda}"));
    }
    z_star_log(lambda.ln(), d, theta)
}

/// [`z_star`] with the fugacity given by its log, for fugacities beyond `f64` range.
pub fn z_star_log(lambda_log: f64, d: usize, theta: f64) -> Result<ZStar> {
    check(d, theta)?;
    let ls = ln_cap_area(d, theta)?;
    let lq = ln_cap_area(d, q_of_theta(theta)?)?;
    let arg = lambda_log + ls + 2.0 * (lambda_log + lq).exp();
    let z = lambert_w0_of_exp(arg, Tolerance::default())?;
    Ok(ZStar {
        lambda_log,
        z_star: z,
        alpha_lb_log: lambda_log - z,
    })
}

/// `log` of the default fugacity `1 / (d s_d(q(theta)))`.
pub fn default_lambda_log(d: usize, theta: f64) -> Result<f64> {
    check(d, theta)?;
    Ok(-(d as f64).ln() - ln_cap_area(d, q_of_theta(theta)?)?)
}

/// Per-codeword log-volume comparison of spherical codes of angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeMeasureRow {
    pub d: usize,
    pub theta: f64,
    /// `log s_d(q(theta))`
    pub log_sdq: f64,
    /// `log s_d(c / 2d)`, the cell-model value
    pub cell_model_log: f64,
    pub c: f64,
    pub difference: f64,
    pub dominates: bool,
}

pub fn code_measure_bounds(d: usize, theta: f64, c: f64) -> Result<CodeMeasureRow> {
    check(d, theta)?;
    if d < 3 {
        return domain(format!("code measure comparison needs d >= 3, got {d}"));
    }
    let cell = c / (2.0 * d as f64);
    if !(c > 0.0) || !(cell < FRAC_PI_2) {
        return domain(format!("need c > 0 and c/(2d) < pi/2, got c = {c}"));
    }
    let log_sdq = ln_cap_area(d, q_of_theta(theta)?)?;
    let cell_model_log = ln_cap_area(d, cell)?;
    Ok(CodeMeasureRow {
        d,
        theta,
        log_sdq,
        cell_model_log,
        c,
        difference: log_sdq - cell_model_log,
        dominates: log_sdq > cell_model_log,
    })
}

/// One line of the bounds table. Field names double as the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub d: usize,
    pub theta_rad: f64,
    pub covering_lb_log: f64,
    pub jjp_lb_log: f64,
    pub rankin_ub_log: Option<f64>,
    pub kl_ub_log: Option<f64>,
    pub c_theta: f64,
    pub q_theta: f64,
    /// `1/(d s_d(q(theta)))`; `None` once it overflows (use `z_star` and
    /// `alpha_lb_log`, which stay finite)
    pub lambda: Option<f64>,
    pub z_star: f64,
    pub alpha_lb_log: f64,
    pub asymptotic_flags: String,
}

pub const BOUNDS_CSV_HEADER: [&str; 12] = [
    "d",
    "theta_rad",
    "covering_lb_log",
    "jjp_lb_log",
    "rankin_ub_log",
    "kl_ub_log",
    "c_theta",
    "q_theta",
    "lambda",
    "z_star",
    "alpha_lb_log",
    "asymptotic_flags",
];

impl BoundsRow {
    pub fn covering_lb(&self) -> Option<f64> {
        exp_if_finite(self.covering_lb_log)
    }

    pub fn jjp_lb(&self) -> Option<f64> {
        exp_if_finite(self.jjp_lb_log)
    }

    pub fn alpha_lb(&self) -> Option<f64> {
        exp_if_finite(self.alpha_lb_log)
    }

    fn csv_fields(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map(real).unwrap_or_default();
        vec![
            self.d.to_string(),
            real(self.theta_rad),
            real(self.covering_lb_log),
            real(self.jjp_lb_log),
            opt(self.rankin_ub_log),
            opt(self.kl_ub_log),
            real(self.c_theta),
            real(self.q_theta),
            opt(self.lambda),
            real(self.z_star),
            real(self.alpha_lb_log),
            self.asymptotic_flags.clone(),
        ]
    }
}

/// Whether `theta` is the kissing angle `pi/3` (to the last bit or two).
pub fn is_kissing_angle(theta: f64) -> bool {
    (theta - FRAC_PI_3).abs() <= 4.0 * f64::EPSILON
}

pub fn bounds_row(d: usize, theta: f64) -> Result<BoundsRow> {
    check(d, theta)?;
    let cov = covering_lower_bound(d, theta)?;
    let c = c_of_theta(theta)?;
    let lambda_log = default_lambda_log(d, theta)?;
    let z = z_star_log(lambda_log, d, theta)?;
    let kissing = if is_kissing_angle(theta) {
        Some(kissing_bounds(d)?)
    } else {
        None
    };
    let mut flags = vec!["covering_lb=exact", "jjp_lb=asymptotic"];
    if kissing.is_some() {
        flags.extend(["rankin_ub=asymptotic", "kl_ub=asymptotic"]);
    }
    flags.push("alpha_lb=asymptotic");
    Ok(BoundsRow {
        d,
        theta_rad: theta,
        covering_lb_log: cov.log_value,
        jjp_lb_log: cov.log_value + (c * d as f64).ln(),
        rankin_ub_log: kissing.map(|k| k.rankin_ub_log),
        kl_ub_log: kissing.map(|k| k.kl_ub_log),
        c_theta: c,
        q_theta: q_of_theta(theta)?,
        lambda: exp_if_finite(lambda_log),
        z_star: z.z_star,
        alpha_lb_log: z.alpha_lb_log,
        asymptotic_flags: flags.join(";"),
    })
}

pub fn bounds_table(d_min: usize, d_max: usize, d_step: usize, theta: f64) -> Result<Vec<BoundsRow>> {
    if d_min < 2 || d_min > d_max || d_step == 0 {
        return domain(format!(
            "need 2 <= d_min <= d_max and d_step >= 1, got {d_min}..{d_max} step {d_step}"
        ));
    }
    (d_min..=d_max).step_by(d_step).map(|d| bounds_row(d, theta)).collect()
}

pub fn write_bounds_csv<W: Write>(rows: &[BoundsRow], mut w: W) -> Result<()> {
    writeln!(w, "{}", BOUNDS_CSV_HEADER.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.csv_fields().join(","))?;
    }
    Ok(())
}

pub fn write_bounds_json<W: Write>(rows: &[BoundsRow], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, rows)?;
    Ok(())
}
