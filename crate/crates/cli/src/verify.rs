use std::sync::Arc;

use rayon::prelude::*;
use serde_json::{json, Value};
use voatheta::block::{verify_corollary, verify_main_theorem, zhu_recurrence_check, Insertion, ModuleSpec};
use voatheta::coset::{frame_st, verify_final_t_exact, verify_final_theorem, FinalLaw};
use voatheta::modforms::{verify_eisenstein_modularity, verify_eta_modularity, verify_wp_modularity, Sl2, TransformReport};
use voatheta::rational::{int, rat, vec_to_strs};
use voatheta::{Error, Rational, Result};

use crate::commands::{order_or, parse_order};
use crate::input;
use crate::output::complex_text;
use crate::{Common, Failure, Law, Outcome, VerifyArgs};

/// One line of a sweep.
struct Row {
    label: String,
    pass: bool,
    residual: f64,
    json: Value,
}

type Job<'a> = Box<dyn Fn() -> Result<Row> + Send + Sync + 'a>;

fn transform_row(law: &str, r: TransformReport) -> Row {
    Row {
        label: format!("{law} {} tau={}", rho_name(&r.rho), complex_text(r.tau)),
        pass: r.pass,
        residual: r.residual + r.tail_budget,
        json: json!({"law": law, "report": r}),
    }
}

fn rho_name(r: &Sl2) -> String {
    match *r {
        x if x == Sl2::S => "S".into(),
        x if x == Sl2::T => "T".into(),
        x if x == Sl2::st() => "ST".into(),
        x if x == Sl2::IDENTITY => "I".into(),
        x => format!("[{},{};{},{}]", x.a, x.b, x.c, x.d),
    }
}

fn law_name(l: Law) -> &'static str {
    match l {
        Law::Eta => "eta",
        Law::Eisenstein => "eisenstein",
        Law::Wp => "wp",
        Law::Main => "main",
        Law::Corollary => "corollary",
        Law::CosetT => "coset-T",
        Law::CosetS => "coset-S",
        Law::Zhu => "zhu",
    }
}

pub fn run(c: &Common, a: &VerifyArgs) -> std::result::Result<Outcome, Failure> {
    let taus = input::tau_list(c.tau_list.as_deref(), c.tau.as_deref())?;
    let rhos = input::rho_list(a.rho.as_deref())?;
    let tol = c.tol;
    let name = law_name(a.law);
    let mut jobs: Vec<Job> = Vec::new();
    match a.law {
        Law::Eta | Law::Eisenstein | Law::Wp => {
            let order = order_or(c, int(100))?;
            let z = input::parse_tau(&a.z)?;
            for rho in &rhos {
                for &tau in &taus {
                    let (rho, order) = (*rho, order.clone());
                    let (law, weight, k, z_order) = (a.law, a.weight, a.k, a.z_order);
                    jobs.push(Box::new(move || {
                        let r = match law {
                            Law::Eta => verify_eta_modularity(rho, tau, tol, &order)?,
                            Law::Eisenstein => verify_eisenstein_modularity(weight, rho, tau, tol, &order)?,
                            _ => verify_wp_modularity(k, rho, z, tau, tol, &order, z_order)?,
                        };
                        Ok(transform_row(name, r))
                    }));
                }
            }
        }
        Law::Main => {
            if a.task.is_empty() {
                return Err(Error::Parse("verify --law main needs --task".into()).into());
            }
            let mut tasks = Vec::new();
            for p in &a.task {
                tasks.extend(input::tasks(p)?);
            }
            if let Some(o) = &c.order {
                let o = parse_order(o)?;
                for t in &mut tasks {
                    t.order = o.clone();
                }
            }
            for t in tasks {
                for rho in &rhos {
                    for &tau in &taus {
                        let (t, rho) = (t.clone(), *rho);
                        jobs.push(Box::new(move || {
                            let r = verify_main_theorem(&t, &rho, tau, tol)?;
                            Ok(Row {
                                label: format!(
                                    "main {} {} u=[{}] v=[{}] tau={}",
                                    rho_name(&rho),
                                    t.insertion,
                                    vec_to_strs(&t.u).join(","),
                                    vec_to_strs(&t.v).join(","),
                                    complex_text(tau)
                                ),
                                pass: r.pass,
                                residual: r.residual,
                                json: json!({"law": "main", "tau": crate::output::complex(tau), "report": r}),
                            })
                        }));
                    }
                }
            }
        }
        Law::Corollary => {
            let lat = input::lattice(a.lat.lattice.as_deref(), a.lat.gram.as_deref())?;
            let d = lat.rank();
            let order = order_or(c, int(100))?;
            let pairs: Vec<(Vec<Rational>, Vec<Rational>)> = if a.u.is_some() || a.v.is_some() {
                vec![(input::vector(a.u.as_deref(), d)?, input::vector(a.v.as_deref(), d)?)]
            } else {
                let z = vec![int(0); d];
                let q = vec![rat(1, 4); d];
                vec![(z.clone(), z.clone()), (q.clone(), z.clone()), (z, q.clone()), (q.clone(), q)]
            };
            for (u, v) in pairs {
                for rho in &rhos {
                    let (lat, u, v, rho, order) = (lat.clone(), u.clone(), v.clone(), *rho, order.clone());
                    jobs.push(Box::new(move || {
                        let r = verify_corollary(&lat, &u, &v, &rho, tol, &order)?;
                        Ok(Row {
                            label: format!("corollary {} u=[{}] v=[{}]", rho_name(&rho), vec_to_strs(&u).join(","), vec_to_strs(&v).join(",")),
                            pass: r.pass,
                            residual: r.max_diff,
                            json: json!({"law": "corollary", "rho": rho, "report": r}),
                        })
                    }));
                }
            }
        }
        Law::CosetT | Law::CosetS => {
            let frame = Arc::new(input::frame(a.frame.as_deref())?);
            let order = order_or(c, int(150))?;
            let st = Arc::new(frame_st(&frame, &order)?);
            let d = frame.k.rank();
            let (u, v) = (input::vector(a.u.as_deref(), d)?, input::vector(a.v.as_deref(), d)?);
            let ins = Insertion::parse(&a.insertion)?;
            let law = if a.law == Law::CosetT { FinalLaw::T } else { FinalLaw::S };
            for class in 0..st.classes.len() {
                for &tau in &taus {
                    let (frame, st, u, v, ins, order) = (frame.clone(), st.clone(), u.clone(), v.clone(), ins.clone(), order.clone());
                    jobs.push(Box::new(move || {
                        let r = verify_final_theorem(&frame, &st, class, &ins, &u, &v, law, tau, &order, tol)?;
                        let exact = if law == FinalLaw::T {
                            Some(verify_final_t_exact(&frame, &st, class, &ins, &u, &v, &int(20))?)
                        } else {
                            None
                        };
                        let mut row = transform_row(name, r);
                        row.label = format!("{name} class {class} [{}] tau={}", st.classes[class].join(","), complex_text(tau));
                        row.pass &= exact.unwrap_or(true);
                        row.json["class"] = json!(class);
                        if let Some(e) = exact {
                            row.json["exact"] = json!(e);
                        }
                        Ok(row)
                    }));
                }
            }
        }
        Law::Zhu => {
            let lat = input::lattice(a.lat.lattice.as_deref(), a.lat.gram.as_deref())?;
            let d = lat.rank();
            let e1: String = (0..d).map(|i| if i == 0 { "1" } else { "0" }).collect::<Vec<_>>().join(",");
            let av = input::vector(Some(a.a.as_deref().unwrap_or(&e1)), d)?;
            let bv = input::vector(Some(a.b.as_deref().unwrap_or(&e1)), d)?;
            let module = ModuleSpec::new(lat, input::vector(a.shift.as_deref(), d)?)?;
            let q_order = parse_order(&a.q_order)?;
            let w_order = a.w_order;
            jobs.push(Box::new(move || {
                let r = zhu_recurrence_check(&module, &bv, &av, w_order, &q_order)?;
                let terms: Vec<Value> = r
                    .terms
                    .iter()
                    .map(|t| json!({"power": t.power, "token": t.token, "lhs": t.lhs.to_string(), "rhs": t.rhs.to_string(), "equal": t.equal}))
                    .collect();
                Ok(Row {
                    label: format!("zhu a=[{}] b=[{}], {} coefficients", vec_to_strs(&av).join(","), vec_to_strs(&bv).join(","), r.terms.len()),
                    pass: r.all_equal,
                    residual: if r.all_equal { 0.0 } else { f64::INFINITY },
                    json: json!({"law": "zhu", "terms": terms, "pass": r.all_equal}),
                })
            }));
        }
    }
    // input order is kept: collect on an indexed parallel iterator is ordered
    let rows: Vec<Row> = jobs.par_iter().map(|j| j()).collect::<Result<Vec<_>>>()?;
    let ok = rows.iter().all(|r| r.pass);
    let text = rows
        .iter()
        .map(|r| format!("{}  {}  residual {:.3e}", if r.pass { "PASS" } else { "FAIL" }, r.label, r.residual))
        .collect::<Vec<_>>()
        .join("\n");
    let json = Value::Array(rows.into_iter().map(|r| r.json).collect());
    Ok(Outcome { json, text, ok })
}

