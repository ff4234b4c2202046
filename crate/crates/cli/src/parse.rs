//! Parsers for angles, dimension ranges and region specs.

use std::f64::consts::PI;

/// Angles: `pi/3`, `2pi/5`, `2*pi/5`, `pi`, `60deg`, or radians such as `1.0472`.
///
/// `pi/n` is computed as `PI / n` so the common cases are reproduced exactly,
/// and `Ndeg` with `180/N` integral is routed through the same path.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace(' ', "");
    let value = if let Some(deg) = t.strip_suffix("deg") {
        let x: f64 = deg.parse().map_err(|_| format!("bad angle in degrees: '{s}'"))?;
        let ratio = 180.0 / x;
        if ratio.is_finite() && ratio.fract() == 0.0 {
            PI / ratio
        } else {
            x * PI / 180.0
        }
    } else if let Some(pos) = t.find("pi") {
        let (num, rest) = t.split_at(pos);
        let rest = &rest[2..];
        let k = match num.trim_end_matches('*') {
            "" => 1.0,
            n => n.parse::<f64>().map_err(|_| format!("bad multiple of pi: '{s}'"))?,
        };
        let den = match rest.strip_prefix('/') {
            Some(d) => d.parse::<f64>().map_err(|_| format!("bad divisor of pi: '{s}'"))?,
            None if rest.is_empty() => 1.0,
            None => return Err(format!("bad angle: '{s}'")),
        };
        if k == 1.0 {
            PI / den
        } else {
            k * PI / den
        }
    } else {
        t.parse::<f64>().map_err(|_| format!("bad angle: '{s}' (try pi/3, 60deg or radians)"))?
    };
    if !value.is_finite() {
        return Err(format!("angle '{s}' is not finite"));
    }
    Ok(value)
}

/// Dimension sets: `N`, `A..B` (inclusive) or `A..B:STEP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimRange {
    pub lo: usize,
    pub hi: usize,
    pub step: usize,
}

pub fn parse_dims(s: &str) -> Result<DimRange, String> {
    let bad = || format!("bad dimension range '{s}' (use N, A..B or A..B:STEP)");
    let (range, step) = match s.split_once(':') {
        Some((r, st)) => (r, st.parse::<usize>().map_err(|_| bad())?),
        None => (s, 1),
    };
    let (lo, hi) = match range.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|_| bad())?,
            b.trim().trim_start_matches('=').parse::<usize>().map_err(|_| bad())?,
        ),
        None => {
            let d = range.trim().parse::<usize>().map_err(|_| bad())?;
            (d, d)
        }
    };
    if lo < 2 || hi < lo || step == 0 {
        return Err(format!("dimension range '{s}' must satisfy 2 <= A <= B, STEP >= 1"));
    }
    Ok(DimRange { lo, hi, step })
}

/// Where to simulate: `sphere`, or `cap:PSI` (a cap of angular radius PSI around e_0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionArg {
    Sphere,
    Cap(f64),
}

pub fn parse_region(s: &str) -> Result<RegionArg, String> {
    match s.split_once(':') {
        None if s == "sphere" => Ok(RegionArg::Sphere),
        Some(("cap", psi)) => {
            let psi = parse_angle(psi)?;
            if !(psi > 0.0 && psi <= PI) {
                return Err(format!("cap radius must lie in (0, pi], got {psi}"));
            }
            Ok(RegionArg::Cap(psi))
        }
        _ => Err(format!("bad region '{s}' (use sphere or cap:PSI)")),
    }
}
