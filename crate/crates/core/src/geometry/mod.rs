//! Sphere and spherical-cap primitives.
//!
//! Angles are radians throughout. Cap areas are normalized so the whole
//! sphere has area 1.

mod io;
mod sampling;

pub use io::{read_code_csv, read_code_json, write_code_csv, write_code_json};
pub use sampling::{sample_uniform_cap, sample_uniform_sphere, CapSampler};

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{ln_regularized_incomplete_beta, regularized_incomplete_beta, Tolerance};

/// Slack allowed on the norm of a unit vector and on externally loaded codes.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// A point of the unit sphere `S_{d-1}` in `R^d`, `d >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Wraps `coords`, which must already have unit norm (within [`UNIT_TOLERANCE`]).
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return domain(format!("unit vectors need d >= 2, got d = {}", coords.len()));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
            return domain(format!("vector norm {norm} is not 1"));
        }
        Ok(Self(coords))
    }

    /// Scales `coords` to unit length.
    pub fn normalize(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return domain(format!("unit vectors need d >= 2, got d = {}", coords.len()));
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return domain("cannot normalize a zero or non-finite vector");
        }
        coords.iter_mut().for_each(|c| *c /= norm);
        Ok(Self(coords))
    }

    pub(crate) fn from_normalized(coords: Vec<f64>) -> Self {
        debug_assert!(coords.len() >= 2);
        Self(coords)
    }

    /// The `i`-th standard basis vector of `R^d`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if d < 2 || i >= d {
            return domain(format!("no basis vector e_{i} in dimension {d}"));
        }
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Ok(Self(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The closed cap `C_psi(center) = { y : <y, center> >= cos psi }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub center: UnitVector,
    pub psi: f64,
}

impl Cap {
    pub fn new(center: UnitVector, psi: f64) -> Result<Self> {
        if !(psi > 0.0 && psi <= PI) {
            return domain(format!("cap radius must lie in (0, pi], got {psi}"));
        }
        Ok(Self { center, psi })
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, y: &UnitVector) -> bool {
        self.center.dot(y) >= self.psi.cos()
    }

    /// Normalized area of the cap.
    pub fn area(&self) -> f64 {
        cap_area(self.dim(), self.psi).expect("cap radius validated at construction")
    }
}

/// A finite set of unit vectors with pairwise angle at least `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalCode {
    pub dim: usize,
    pub theta: f64,
    pub points: Vec<UnitVector>,
}

impl SphericalCode {
    pub fn empty(dim: usize, theta: f64) -> Result<Self> {
        check_code_params(dim, theta)?;
        Ok(Self {
            dim,
            theta,
            points: Vec::new(),
        })
    }

    /// Builds a code, rejecting any pair with inner product above `cos theta`
    /// (exactly, no slack).
    pub fn new(dim: usize, theta: f64, points: Vec<UnitVector>) -> Result<Self> {
        check_code_params(dim, theta)?;
        check_dims(dim, &points)?;
        if !is_code(&points, theta) {
            return Err(Error::Invalid(format!(
                "points do not form a spherical code of angle {theta}"
            )));
        }
        Ok(Self { dim, theta, points })
    }

    /// Validation for externally loaded codes: unit norms and pairwise inner
    /// products are allowed [`UNIT_TOLERANCE`] of slack.
    pub fn validate(&self) -> Result<()> {
        check_code_params(self.dim, self.theta)?;
        check_dims(self.dim, &self.points)?;
        let c = self.theta.cos() + UNIT_TOLERANCE;
        for (i, x) in self.points.iter().enumerate() {
            for y in &self.points[i + 1..] {
                if x.dot(y) > c {
                    return Err(Error::Invalid(format!(
                        "pair with inner product {} exceeds cos theta = {}",
                        x.dot(y),
                        self.theta.cos()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// True when `y` can be added without violating the angle constraint.
    pub fn admits(&self, y: &UnitVector) -> bool {
        let c = self.theta.cos();
        self.points.iter().all(|x| x.dot(y) <= c)
    }
}

fn check_code_params(dim: usize, theta: f64) -> Result<()> {
    if dim < 2 {
        return domain(format!("code dimension must be >= 2, got {dim}"));
    }
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return domain(format!("code angle must lie in (0, pi/2), got {theta}"));
    }
    Ok(())
}

fn check_dims(dim: usize, points: &[UnitVector]) -> Result<()> {
    match points.iter().find(|p| p.dim() != dim) {
        Some(p) => Err(Error::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        }),
        None => Ok(()),
    }
}

/// Angle between two unit vectors, in `[0, pi]`.
pub fn angle(u: &UnitVector, v: &UnitVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(u.dot(v).clamp(-1.0, 1.0).acos())
}

/// True iff every pairwise inner product is `<= cos theta`. Exact comparison.
pub fn is_code(points: &[UnitVector], theta: f64) -> bool {
    let c = theta.cos();
    points
        .iter()
        .enumerate()
        .all(|(i, x)| points[i + 1..].iter().all(|y| x.dot(y) <= c))
}

fn check_cap_args(d: usize, psi: f64) -> Result<()> {
    if d < 2 {
        return domain(format!("cap area needs d >= 2, got {d}"));
    }
    if !(0.0..=PI).contains(&psi) {
        return domain(format!("cap radius must lie in [0, pi], got {psi}"));
    }
    Ok(())
}

/// Normalized surface area `s_d(psi)` of a cap of angular radius `psi` on `S_{d-1}`.
pub fn cap_area(d: usize, psi: f64) -> Result<f64> {
    check_cap_args(d, psi)?;
    if psi > FRAC_PI_2 {
        return Ok(1.0 - cap_area(d, PI - psi)?);
    }
    if psi == FRAC_PI_2 {
        return Ok(0.5);
    }
    let s = psi.sin();
    Ok(0.5 * regularized_incomplete_beta(s * s, (d as f64 - 1.0) / 2.0, 0.5, Tolerance::default())?)
}

/// `ln s_d(psi)`, finite for caps far too small to represent directly.
pub fn ln_cap_area(d: usize, psi: f64) -> Result<f64> {
    check_cap_args(d, psi)?;
    if psi > FRAC_PI_2 {
        return Ok(cap_area(d, psi)?.ln());
    }
    if psi == FRAC_PI_2 {
        return Ok(0.5f64.ln());
    }
    let s = psi.sin();
    let l = ln_regularized_incomplete_beta(s * s, (d as f64 - 1.0) / 2.0, 0.5, Tolerance::default())?;
    Ok(l + 0.5f64.ln())
}

/// Density of the colatitude of a uniform point, `(1/sqrt(pi)) Γ(d/2)/Γ((d-1)/2) sin^{d-2}`,
/// returned as its log prefactor.
pub(crate) fn ln_cap_density_prefactor(d: usize) -> f64 {
    use crate::numerics::log_gamma;
    let d = d as f64;
    log_gamma(d / 2.0).unwrap() - log_gamma((d - 1.0) / 2.0).unwrap() - 0.5 * PI.ln()
}

fn check_theta(theta: f64, what: &str) -> Result<()> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return domain(format!("{what} needs 0 < theta < pi/2, got {theta}"));
    }
    Ok(())
}

/// Angular radius of the smallest cap containing the intersection of two
/// `theta`-caps whose centers are `theta` apart.
pub fn q_of_theta(theta: f64) -> Result<f64> {
    check_theta(theta, "q_of_theta")?;
    let c = theta.cos();
    let r = ((c - 1.0) * (c - 1.0) * (1.0 + 2.0 * c)).sqrt() / theta.sin();
    Ok(r.min(1.0).asin())
}

/// The angle `theta*` with `sqrt(2) sin(theta*/2) = sin(theta/2)`.
pub fn theta_star(theta: f64) -> Result<f64> {
    check_theta(theta, "theta_star")?;
    Ok(2.0 * ((theta / 2.0).sin() / 2f64.sqrt()).asin())
}

/// The angle `tau` with `cos tau = sqrt(cos theta)`: the spherical triangle with
/// sides `tau, tau, theta` has a right angle opposite `theta`. Above this
/// threshold the lens-cover cap center lies strictly between its two generators.
pub fn right_angle_threshold(theta: f64) -> Result<f64> {
    check_theta(theta, "right_angle_threshold")?;
    Ok(theta.cos().sqrt().acos())
}

/// Radius of the cap covering `C_theta(u) ∩ C_tau(x)` when `angle(u, x) = tau`.
pub fn sigma(theta: f64, tau: f64) -> Result<f64> {
    check_theta(theta, "sigma")?;
    let slack = 1e-12;
    if !(tau >= theta / 2.0 - slack && tau <= theta + slack) {
        return domain(format!("sigma needs theta/2 <= tau <= theta, got tau = {tau}, theta = {theta}"));
    }
    let ct = theta.cos();
    let c2 = tau.cos().powi(2);
    let radicand = 1.0 + 2.0 * c2 * ct - 2.0 * c2 - ct * ct;
    if radicand < -1e-12 {
        return Err(Error::NumericalFailure(format!(
            "sigma radicand {radicand} is negative"
        )));
    }
    let ratio = radicand.max(0.0).sqrt() / tau.sin();
    if ratio > 1.0 + 1e-12 {
        return Err(Error::NumericalFailure(format!("sigma: sine ratio {ratio} exceeds 1")));
    }
    Ok(ratio.min(1.0).asin())
}

/// Volume of the tetrahedron spanned by the origin and three unit vectors with
/// pairwise angles `a12, a13, a23`.
pub fn pyramid_volume(a12: f64, a13: f64, a23: f64) -> Result<f64> {
    for a in [a12, a13, a23] {
        if !(0.0..=PI).contains(&a) {
            return domain(format!("pyramid edge angle {a} outside [0, pi]"));
        }
    }
    let (c12, c13, c23) = (a12.cos(), a13.cos(), a23.cos());
    let radicand = 1.0 + 2.0 * c12 * c13 * c23 - c12 * c12 - c13 * c13 - c23 * c23;
    if radicand < -1e-12 {
        return domain(format!(
            "angles ({a12}, {a13}, {a23}) are not realizable by three unit vectors"
        ));
    }
    Ok(radicand.max(0.0).sqrt() / 6.0)
}

/// The cap of radius `sigma(theta, tau)` covering the lens `C_theta(u) ∩ C_tau(x)`.
///
/// Its center is the projection of the lens rim (points `y` with
/// `<y,u> = cos theta`, `<y,x> = cos tau`) onto `span{u, x}`, so every rim point
/// is exactly `sigma` away from it.
pub fn lens_cover_cap(u: &UnitVector, x: &UnitVector, theta: f64, tau: f64) -> Result<Cap> {
    check_theta(theta, "lens_cover_cap")?;
    let ts = theta_star(theta)?;
    if !(tau >= ts - 1e-12 && tau <= theta + 1e-12) {
        return domain(format!("lens_cover_cap needs theta* <= tau <= theta, got tau = {tau}"));
    }
    let sep = angle(u, x)?;
    if (sep - tau).abs() > 1e-9 {
        return domain(format!("angle(u, x) = {sep} differs from tau = {tau}"));
    }
    let ct = theta.cos();
    let cu = tau.cos();
    let det = 1.0 - cu * cu;
    let a = (ct - cu * cu) / det;
    let b = (cu - cu * ct) / det;
    let center: Vec<f64> = u
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(ui, xi)| a * ui + b * xi)
        .collect();
    Cap::new(UnitVector::normalize(center)?, sigma(theta, tau)?)
}
