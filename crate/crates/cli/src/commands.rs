use num_complex::Complex64;
use serde_json::{json, Value};
use voatheta::block::{evaluate_z, s_t_matrices, trace_function, z_theta, z_theta_bruteforce, Insertion, ModuleSpec, ThetaTask};
use voatheta::coset::{evaluate_x, s_closure_probe, theta_decompose, x_trace};
use voatheta::lattice::{theta_budget, theta_with_characteristics, LatticeCoset, ThetaWeight};
use voatheta::modforms::{eisenstein_budget, eisenstein_e, eta_budget, eta_power, weierstrass_p};
use voatheta::qseries::{set_max_denominator, QSeries};
use voatheta::rational::{format_rational, int, parse_rational, rat, vec_to_strs};
use voatheta::{Error, Rational};

use crate::input;
use crate::output::{self, evaluations, evaluations_json, evaluations_text};
use crate::{Cli, Cmd, Common, Failure, Outcome};

pub fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let c = &cli.common;
    if !(c.tol > 0.0) {
        return Err(Error::Parse(format!("tolerance must be positive, got {}", c.tol)).into());
    }
    if let Some(d) = c.max_den {
        set_max_denominator(d);
    }
    if let Some(n) = c.threads {
        // a second call in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.cmd {
        Cmd::Eta { power } => {
            let order = order_or(c, int(100))?;
            let s = eta_power(*power, &order)?;
            series_or_eval(c, &s, |tau| s.evaluate(tau, &eta_budget(*power)))
        }
        Cmd::Eisenstein { weight } => {
            let order = order_or(c, int(100))?;
            let s = eisenstein_e(*weight, &order)?;
            series_or_eval(c, &s, |tau| s.evaluate(tau, &eisenstein_budget(*weight as u32)))
        }
        Cmd::Wp { k, z, z_order } => wp(c, *k, z.as_deref(), *z_order),
        Cmd::ThetaLattice { lat, shift, u, v } => {
            let lattice = input::lattice(lat.lattice.as_deref(), lat.gram.as_deref())?;
            let d = lattice.rank();
            let (shift, u, v) = (input::vector(shift.as_deref(), d)?, input::vector(u.as_deref(), d)?, input::vector(v.as_deref(), d)?);
            let order = order_or(c, int(100))?;
            let coset = LatticeCoset::new(lattice.clone(), shift)?;
            let s = theta_with_characteristics(&coset, &u, &v, &order)?;
            let budget = theta_budget(&lattice, &u, &ThetaWeight::One, 0);
            series_or_eval(c, &s, |tau| s.evaluate(tau, &budget))
        }
        Cmd::Trace { lat, shift, insertion } => {
            let lattice = input::lattice(lat.lattice.as_deref(), lat.gram.as_deref())?;
            let d = lattice.rank();
            let module = ModuleSpec::new(lattice.clone(), input::vector(shift.as_deref(), d)?)?;
            let ins = Insertion::parse(insertion)?;
            let order = order_or(c, int(100))?;
            let s = trace_function(&module, &ins, &order)?;
            let zero = vec![int(0); d];
            series_or_eval(c, &s, |tau| evaluate_z(&s, &lattice, &zero, &ins, tau))
        }
        Cmd::Ztheta { task, oracle } => {
            let mut tasks = input::tasks(task)?;
            if tasks.len() != 1 {
                return Err(Error::Parse("ztheta expects a single task".into()).into());
            }
            let mut t = tasks.remove(0);
            if let Some(o) = &c.order {
                t.order = parse_order(o)?;
            }
            ztheta(c, &t, *oracle)
        }
        Cmd::Xtrace { task } => {
            let mut tasks = input::tasks(task)?;
            if tasks.len() != 1 {
                return Err(Error::Parse("xtrace expects a single task".into()).into());
            }
            let mut t = tasks.remove(0);
            if let Some(o) = &c.order {
                t.order = parse_order(o)?;
            }
            let s = x_trace(&t)?;
            series_or_eval(c, &s, |tau| evaluate_x(&s, &t.module.lattice, &t.insertion, tau))
        }
        Cmd::StMatrices { lat } => {
            let lattice = input::lattice(lat.lattice.as_deref(), lat.gram.as_deref())?;
            let st = s_t_matrices(&lattice, &order_or(c, int(100))?)?;
            let json = serde_json::to_value(&st).expect("json");
            let text = format!(
                "classes: {}\nT (exact): {}\nS (Gauss sum):\n{}\nS (fitted, residual {:e}):\n{}\nagreement: S {:e}, T {:e}",
                st.classes.iter().map(|c| format!("[{}]", c.join(", "))).collect::<Vec<_>>().join(" "),
                st.t_exact.join(", "),
                output::matrix_text(&st.s_gauss),
                st.s_fit_residual,
                output::matrix_text(&st.s_fit),
                st.s_agreement,
                st.t_agreement,
            );
            Ok(Outcome { json, text, ok: true })
        }
        Cmd::Verify(args) => crate::verify::run(c, args),
        Cmd::Decompose { frame, shift_index } => {
            let frame = input::frame(frame.as_deref())?;
            let order = order_or(c, int(40))?;
            let indices: Vec<usize> = match shift_index {
                Some(i) => vec![*i],
                None => (0..frame.shifts.len()).collect(),
            };
            let mut items = Vec::new();
            let mut lines = Vec::new();
            let mut ok = true;
            for i in indices {
                let dec = theta_decompose(&frame, i, &order)?;
                ok &= dec.reassembly_exact;
                lines.push(format!("shift {i}: {} classes, reassembly {}", dec.classes.len(), if dec.reassembly_exact { "exact" } else { "FAILED" }));
                let classes: Vec<Value> = dec
                    .classes
                    .iter()
                    .map(|cl| {
                        lines.push(format!("  mu = [{}]: ch = {}", vec_to_strs(&cl.mu).join(", "), cl.ch));
                        json!({
                            "mu": vec_to_strs(&cl.mu),
                            "class_sum": output::series(&cl.class_sum),
                            "theta_k": output::series(&cl.theta_k),
                            "ch": output::series(&cl.ch),
                        })
                    })
                    .collect();
                items.push(json!({"shift_index": i, "classes": classes, "reassembly_exact": dec.reassembly_exact}));
            }
            Ok(Outcome { json: Value::Array(items), text: lines.join("\n"), ok })
        }
        Cmd::ProbeClosure { frame } => {
            let frame = input::frame(frame.as_deref())?;
            let p = s_closure_probe(&frame, &order_or(c, int(40))?)?;
            let text = format!("{}; residual {:e}, condition {:e}\n{}", p.note, p.residual, p.condition, output::matrix_text(&p.coefficients));
            Ok(Outcome { json: serde_json::to_value(&p).expect("json"), text, ok: true })
        }
    }
}

pub fn parse_order(s: &str) -> Result<Rational, Error> {
    let o = parse_rational(s.trim())?;
    if o <= int(0) {
        return Err(Error::Parse(format!("order must be positive, got {s}")));
    }
    Ok(o)
}

pub fn order_or(c: &Common, default: Rational) -> Result<Rational, Error> {
    c.order.as_deref().map(parse_order).unwrap_or(Ok(default))
}

fn series_or_eval(
    c: &Common,
    s: &QSeries,
    eval: impl FnMut(Complex64) -> voatheta::Result<voatheta::qseries::Evaluation>,
) -> Result<Outcome, Failure> {
    if c.eval {
        let taus = input::tau_list(c.tau_list.as_deref(), c.tau.as_deref())?;
        let evs = evaluations(&taus, c.tol, eval)?;
        Ok(Outcome { json: evaluations_json(&evs), text: evaluations_text(&evs), ok: true })
    } else {
        Ok(Outcome { json: output::series(s), text: s.to_string(), ok: true })
    }
}

fn wp(c: &Common, k: i64, z: Option<&str>, z_order: i64) -> Result<Outcome, Failure> {
    let order = order_or(c, int(100))?;
    let w = weierstrass_p(k, z_order, &order)?;
    if c.eval {
        let z = input::parse_tau(z.ok_or_else(|| Error::Parse("wp --eval needs --z".into()))?)?;
        let taus = input::tau_list(c.tau_list.as_deref(), c.tau.as_deref())?;
        let evs = evaluations(&taus, c.tol, |tau| w.evaluate(z, tau))?;
        let mut json = evaluations_json(&evs);
        json["z"] = output::complex(z);
        return Ok(Outcome { json, text: evaluations_text(&evs), ok: true });
    }
    let mut text = Vec::new();
    let terms: Vec<Value> = w
        .terms
        .iter()
        .map(|t| {
            text.push(format!("z^{}: (2 pi i)^{} * ({})", t.power, t.token, t.series));
            json!({"power": t.power, "token": t.token, "series": output::series(&t.series)})
        })
        .collect();
    Ok(Outcome { json: json!({"k": k, "z_order": z_order, "terms": terms}), text: text.join("\n"), ok: true })
}

fn ztheta(c: &Common, t: &ThetaTask, oracle: bool) -> Result<Outcome, Failure> {
    let s = z_theta(t)?;
    if oracle {
        let d = t.module.rank() as i64;
        let brute = z_theta_bruteforce(t, &(&t.order + rat(d, 24)))?;
        let common = s.trunc().clone().min(brute.trunc().clone());
        let diff = s.truncate(&common).sub(&brute.truncate(&common));
        if !diff.is_zero() {
            let (e, _) = diff.terms().next().expect("nonzero difference");
            return Err(Failure::OracleMismatch(format!("closed form and Fock trace differ at q^({})", format_rational(&e))));
        }
    }
    let big_u: Vec<Rational> = t.module.sector_u0.iter().zip(&t.u).map(|(a, b)| a + b).collect();
    let mut out = series_or_eval(c, &s, |tau| evaluate_z(&s, &t.module.lattice, &big_u, &t.insertion, tau))?;
    if oracle {
        out.json["oracle"] = json!("match");
        out.text.push_str("\noracle: match");
    }
    Ok(out)
}
