use std::io::{BufRead, Read, Write};

use super::{SphericalCode, UnitVector};
use crate::error::{Error, Result};
use crate::fmt::real;

/// JSON form: `{"dim": d, "theta": t, "points": [[...], ...]}`.
pub fn write_code_json<W: Write>(code: &SphericalCode, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, code)?;
    Ok(())
}

pub fn read_code_json<R: Read>(r: R) -> Result<SphericalCode> {
    let code: SphericalCode = serde_json::from_reader(r)?;
    code.validate()?;
    Ok(code)
}

/// CSV form: a `# dim=.. theta=..` comment line, a header `x0,..,x{d-1}`, then
/// one point per row with 17 significant digits.
pub fn write_code_csv<W: Write>(code: &SphericalCode, mut w: W) -> Result<()> {
    writeln!(w, "# dim={} theta={}", code.dim, real(code.theta))?;
    let header: Vec<String> = (0..code.dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in &code.points {
        let row: Vec<String> = p.coords().iter().map(|&c| real(c)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_code_csv<R: BufRead>(mut r: R) -> Result<SphericalCode> {
    let mut first = String::new();
    r.read_line(&mut first)?;
    let (dim, theta) = parse_meta(first.trim())?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let coords = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Invalid(format!("bad coordinate: {e}")))?;
        points.push(UnitVector::new(coords)?);
    }
    let code = SphericalCode { dim, theta, points };
    code.validate()?;
    Ok(code)
}

fn parse_meta(line: &str) -> Result<(usize, f64)> {
    let bad = || Error::Invalid(format!("expected '# dim=.. theta=..', got '{line}'"));
    let rest = line.strip_prefix('#').ok_or_else(bad)?;
    let mut dim = None;
    let mut theta = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            Some(("theta", v)) => theta = v.parse::<f64>().ok(),
            _ => return Err(bad()),
        }
    }
    Ok((dim.ok_or_else(bad)?, theta.ok_or_else(bad)?))
}
