use rand::Rng;
use rand_distr::StandardNormal;

use super::{cap_area, ln_cap_density_prefactor, Cap, UnitVector};
use crate::error::{domain, Result};

/// Uniform point on `S_{d-1}` (normalized Gaussian vector).
pub fn sample_uniform_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitVector> {
    if d < 2 {
        return domain(format!("sphere sampling needs d >= 2, got {d}"));
    }
    Ok(gaussian_direction(d, rng))
}

pub(crate) fn gaussian_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-200 {
            let n = n2.sqrt();
            return UnitVector::from_normalized(v.into_iter().map(|x| x / n).collect());
        }
    }
}

/// Uniform point in a cap.
pub fn sample_uniform_cap<R: Rng + ?Sized>(cap: &Cap, rng: &mut R) -> UnitVector {
    CapSampler::new(cap.clone()).sample(rng)
}

/// Rejection-free sampler for a fixed cap.
///
/// The colatitude is drawn by inverting the cap-area CDF, the azimuthal
/// direction uniformly on the orthogonal `(d-2)`-sphere, and the result is
/// carried from `e_1` to the cap center by a Householder reflection.
#[derive(Debug, Clone)]
pub struct CapSampler {
    cap: Cap,
    area: f64,
    ln_density: f64,
    // Householder axis v = e1 - center, with |v|^2; None when center == e1
    axis: Option<(Vec<f64>, f64)>,
}

impl CapSampler {
    pub fn new(cap: Cap) -> Self {
        let d = cap.dim();
        let mut v: Vec<f64> = cap.center.coords().iter().map(|c| -c).collect();
        v[0] += 1.0;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let axis = if vv > 0.0 { Some((v, vv)) } else { None };
        Self {
            area: cap.area(),
            ln_density: ln_cap_density_prefactor(d),
            cap,
            axis,
        }
    }

    pub fn cap(&self) -> &Cap {
        &self.cap
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let d = self.cap.dim();
        let phi = self.colatitude(rng.random::<f64>());
        let (s, c) = phi.sin_cos();
        let mut y = Vec::with_capacity(d);
        y.push(c);
        if d == 2 {
            y.push(if rng.random::<bool>() { s } else { -s });
        } else {
            let w = gaussian_direction(d - 1, rng);
            y.extend(w.coords().iter().map(|wi| s * wi));
        }
        if let Some((v, vv)) = &self.axis {
            let proj = 2.0 * super::dot(v, &y) / vv;
            y.iter_mut().zip(v).for_each(|(yi, vi)| *yi -= proj * vi);
        }
        let n = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        UnitVector::from_normalized(y.into_iter().map(|x| x / n).collect())
    }

    // Inverse CDF of the colatitude on [0, psi].
    fn colatitude(&self, u: f64) -> f64 {
        let d = self.cap.dim();
        let psi = self.cap.psi;
        match d {
            2 => return u * psi,
            3 => {
                let c = 1.0 - u * (1.0 - psi.cos());
                return c.clamp(-1.0, 1.0).acos();
            }
            _ => {}
        }
        let target = u * self.area;
        if target <= 0.0 {
            return 0.0;
        }
        let m = (d - 2) as i32;
        let density = |phi: f64| (self.ln_density + m as f64 * phi.sin().ln()).exp();
        let (mut lo, mut hi) = (0.0, psi);
        // small-angle guess s ≈ K phi^{d-1}/(d-1)
        let mut phi = (((d - 1) as f64 * target).ln() - self.ln_density) / (d - 1) as f64;
        phi = phi.exp();
        if !(phi > lo && phi < hi) {
            phi = 0.5 * (lo + hi);
        }
        for _ in 0..100 {
            let f = cap_area(d, phi).unwrap_or(0.0) - target;
            if f > 0.0 {
                hi = phi;
            } else {
                lo = phi;
            }
            let dens = density(phi);
            let mut next = if dens > 0.0 { phi - f / dens } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - phi).abs() <= 1e-15 * phi.max(1e-300) || hi - lo <= 1e-15 * hi {
                return next;
            }
            phi = next;
        }
        phi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::angle;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    // Kolmogorov-Smirnov statistic of samples against the uniform law on [a, b].
    fn ks_uniform(mut xs: Vec<f64>, a: f64, b: f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = (x - a) / (b - a);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    // 1.95 / sqrt(n) is the 0.001 critical value of the KS distribution
    fn ks_critical(n: usize) -> f64 {
        1.95 / (n as f64).sqrt()
    }

    #[test]
    fn circle_angles_uniform() {
        let mut r = rng(1);
        let n = 100_000;
        let mut bins = [0usize; 16];
        for _ in 0..n {
            let p = sample_uniform_sphere(2, &mut r).unwrap();
            let a = p.coords()[1].atan2(p.coords()[0]).rem_euclid(2.0 * PI);
            bins[((a / (2.0 * PI) * 16.0) as usize).min(15)] += 1;
        }
        let expect = n as f64 / 16.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - expect).powi(2) / expect).sum();
        // chi-square 15 dof, p = 0.001 critical value 37.70
        assert!(chi2 < 37.70, "chi2 = {chi2}");
    }

    #[test]
    fn archimedes_projection() {
        let mut r = rng(2);
        let n = 50_000;
        let zs: Vec<f64> = (0..n).map(|_| sample_uniform_sphere(3, &mut r).unwrap().coords()[2]).collect();
        assert!(ks_uniform(zs, -1.0, 1.0) < ks_critical(n));
    }

    #[test]
    fn mean_vector_is_small() {
        for d in [2usize, 5, 12] {
            let mut r = rng(3 + d as u64);
            let n = 100_000;
            let mut m = vec![0.0; d];
            for _ in 0..n {
                let p = sample_uniform_sphere(d, &mut r).unwrap();
                m.iter_mut().zip(p.coords()).for_each(|(a, b)| *a += b);
            }
            let norm = m.iter().map(|x| (x / n as f64).powi(2)).sum::<f64>().sqrt();
            assert!(norm <= 4.0 / (n as f64 * d as f64).sqrt() * (d as f64).sqrt(), "d={d}");
        }
    }

    #[test]
    fn cap_samples_stay_inside() {
        let mut r = rng(4);
        for d in [2usize, 3, 4, 9] {
            let center = sample_uniform_sphere(d, &mut r).unwrap();
            let cap = Cap::new(center, 0.7).unwrap();
            let s = CapSampler::new(cap.clone());
            for _ in 0..2000 {
                let y = s.sample(&mut r);
                assert!((y.coords().iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(angle(&y, &cap.center).unwrap() <= 0.7 + 1e-12);
            }
        }
    }

    #[test]
    fn arc_cap_signed_angle_uniform() {
        let mut r = rng(5);
        let cap = Cap::new(UnitVector::basis(2, 0).unwrap(), FRAC_PI_3).unwrap();
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                let y = sample_uniform_cap(&cap, &mut r);
                y.coords()[1].atan2(y.coords()[0])
            })
            .collect();
        assert!(ks_uniform(xs, -FRAC_PI_3, FRAC_PI_3) < ks_critical(n));
    }

    #[test]
    fn cap_colatitude_law_in_d3() {
        let mut r = rng(6);
        let center = UnitVector::normalize(vec![1.0, -2.0, 0.5]).unwrap();
        let cap = Cap::new(center.clone(), FRAC_PI_3).unwrap();
        let s = CapSampler::new(cap);
        let n = 40_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut r).dot(&center)).collect();
        assert!(ks_uniform(xs, 0.5, 1.0) < ks_critical(n));
    }

    #[test]
    fn general_d_colatitude_matches_cap_cdf() {
        // P(colatitude <= phi) = s_d(phi) / s_d(psi); KS against that CDF
        let mut r = rng(7);
        let d = 7;
        let psi = 1.1;
        let cap = Cap::new(UnitVector::basis(d, 3).unwrap(), psi).unwrap();
        let s = CapSampler::new(cap.clone());
        let n = 20_000;
        let total = cap_area(d, psi).unwrap();
        let us: Vec<f64> = (0..n)
            .map(|_| cap_area(d, angle(&s.sample(&mut r), &cap.center).unwrap()).unwrap() / total)
            .collect();
        assert!(ks_uniform(us, 0.0, 1.0) < ks_critical(n));
    }

    #[test]
    fn full_cap_matches_sphere() {
        let mut r = rng(8);
        let cap = Cap::new(UnitVector::basis(3, 0).unwrap(), PI).unwrap();
        let n = 40_000;
        let zs: Vec<f64> = (0..n).map(|_| sample_uniform_cap(&cap, &mut r).coords()[2]).collect();
        assert!(ks_uniform(zs, -1.0, 1.0) < ks_critical(n));
    }
}
