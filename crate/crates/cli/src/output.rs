use num_complex::Complex64;
use serde_json::{json, Value};
use voatheta::qseries::{Evaluation, QSeries};
use voatheta::{Error, Result};

/// Significant digits after the decimal point in printed floats.
pub const PRECISION: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

pub fn complex(z: Complex64) -> Value {
    json!([format!("{:.*e}", PRECISION, z.re), format!("{:.*e}", PRECISION, z.im)])
}

pub fn complex_text(z: Complex64) -> String {
    let sign = if z.im < 0.0 { '-' } else { '+' };
    format!("{:.*} {sign} {:.*}i", PRECISION, z.re, PRECISION, z.im.abs())
}

pub fn series(s: &QSeries) -> Value {
    json!({"series": s.to_json(), "text": s.to_string()})
}

/// Evaluate at each tau, refusing any point whose tail bound reaches `tol`.
pub fn evaluations(taus: &[Complex64], tol: f64, mut eval: impl FnMut(Complex64) -> Result<Evaluation>) -> Result<Vec<(Complex64, Evaluation)>> {
    let mut out = Vec::new();
    for &tau in taus {
        let ev = eval(tau)?;
        if ev.tail_bound >= tol {
            return Err(Error::TailBoundExceeded { bound: ev.tail_bound, tolerance: tol });
        }
        out.push((tau, ev));
    }
    Ok(out)
}

pub fn evaluations_json(evs: &[(Complex64, Evaluation)]) -> Value {
    let items: Vec<Value> = evs
        .iter()
        .map(|(tau, ev)| {
            json!({
                "tau": complex(*tau),
                "value": complex(ev.value),
                "tail_bound": format!("{:e}", ev.tail_bound),
                "precision": PRECISION,
            })
        })
        .collect();
    json!({ "evaluations": items })
}

pub fn evaluations_text(evs: &[(Complex64, Evaluation)]) -> String {
    evs.iter()
        .map(|(tau, ev)| format!("tau = {}: {}  (tail <= {:e})", complex_text(*tau), complex_text(ev.value), ev.tail_bound))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn matrix_text(m: &[Vec<Complex64>]) -> String {
    m.iter()
        .map(|row| row.iter().map(|z| format!("{:>14.10}{:+.10}i", z.re, z.im)).collect::<Vec<_>>().join("  "))
        .collect::<Vec<_>>()
        .join("\n")
}
