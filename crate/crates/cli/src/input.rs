use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;
use voatheta::block::ThetaTask;
use voatheta::coset::CosetFrame;
use voatheta::lattice::RationalLattice;
use voatheta::modforms::Sl2;
use voatheta::rational::parse_rational;
use voatheta::{Error, Rational, Result};

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// `"2,1;1,2"` (rows split by `;`).
pub fn parse_gram(s: &str) -> Result<RationalLattice> {
    let rows = s
        .split(';')
        .map(|r| r.split(',').map(|x| parse_rational(x.trim())).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    RationalLattice::new(rows)
}

/// Lattice from `--lattice FILE` if given, else `--gram`, else `[[2]]`.
pub fn lattice(file: Option<&Path>, gram: Option<&str>) -> Result<RationalLattice> {
    match (file, gram) {
        (Some(p), _) => RationalLattice::from_json(&read_json(p)?),
        (None, Some(g)) => parse_gram(g),
        (None, None) => parse_gram("2"),
    }
}

/// Comma-separated rationals; `None` gives the zero vector of length `d`.
pub fn vector(s: Option<&str>, d: usize) -> Result<Vec<Rational>> {
    match s {
        None => Ok(vec![Rational::from_integer(0.into()); d]),
        Some(s) => {
            let v = s.split(',').map(|x| parse_rational(x.trim())).collect::<Result<Vec<_>>>()?;
            if v.len() != d {
                return Err(Error::DimensionMismatch(format!("vector {s:?} has {} entries, lattice rank is {d}", v.len())));
            }
            Ok(v)
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(1.0);
    }
    if s.contains('/') {
        let r = parse_rational(s)?;
        return Ok(voatheta::rational::to_f64(&r));
    }
    s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Accepts `i`, `2i`, `1/3+i`, `0.1+1.2i`, `-0.5-i`... and `[re, im]`.
pub fn parse_tau(s: &str) -> Result<Complex64> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix('[').and_then(|x| x.strip_suffix(']')) {
        let parts: Vec<&str> = inner.split(',').map(|p| p.trim().trim_matches('"')).collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("bad complex {s:?}")));
        }
        return Ok(Complex64::new(parse_real(parts[0])?, parse_real(parts[1])?));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse_real(s)?, 0.0));
    };
    // split at the last sign that is not an exponent sign or the leading one
    let bytes = body.as_bytes();
    let mut cut = None;
    for (k, &c) in bytes.iter().enumerate().skip(1) {
        if (c == b'+' || c == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            cut = Some(k);
        }
    }
    let (re, im) = match cut {
        Some(k) => (parse_real(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "+" | "" => 1.0,
        "-" => -1.0,
        t => parse_real(t.strip_prefix('+').unwrap_or(t))?,
    };
    Ok(Complex64::new(re, im))
}

/// `;`-separated list of tau values, or a single value.
pub fn tau_list(list: Option<&str>, single: Option<&str>) -> Result<Vec<Complex64>> {
    match (list, single) {
        (Some(l), _) | (None, Some(l)) => l.split(';').map(parse_tau).collect(),
        (None, None) => Ok(vec![Complex64::new(0.0, 1.0)]),
    }
}

/// `S,T,ST` by name, or `;`-separated matrices `a,b,c,d`.
pub fn rho_list(s: Option<&str>) -> Result<Vec<Sl2>> {
    let s = s.unwrap_or("S,T");
    let names: Vec<&str> = s.split(',').map(str::trim).collect();
    if names.iter().all(|n| matches!(*n, "S" | "T" | "ST" | "I")) {
        names.into_iter().map(Sl2::parse).collect()
    } else {
        s.split(';').map(|m| Sl2::parse(m.trim())).collect()
    }
}

/// A task file holds one task object or an array of them.
pub fn tasks(path: &Path) -> Result<Vec<ThetaTask>> {
    match read_json(path)? {
        Value::Array(items) => items.iter().map(ThetaTask::from_json).collect(),
        v => Ok(vec![ThetaTask::from_json(&v)?]),
    }
}

pub fn frame(path: Option<&Path>) -> Result<CosetFrame> {
    match path {
        Some(p) => CosetFrame::from_json(&read_json(p)?),
        None => CosetFrame::dual_frame(&parse_gram("2")?),
    }
}
