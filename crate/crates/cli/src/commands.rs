use num_rational::Ratio;
use serde_json::{json, Value};

use sqfree_core::congruence::{average_u_over_squarefree_q, check_poly_box, count_u, count_w};
use sqfree_core::density::{compute_cf_trace, CfConfig};
use sqfree_core::experiments::{run_average_experiment, run_exact_average, FamilyKind, FamilySpec, Mode};
use sqfree_core::expsum::{check_weyl_bound, discrepancy_exact, erdos_turan_rhs, weyl_sum, PointSet};
use sqfree_core::lattice::{build_lattice, check_minkowski, check_schmidt_count, count_box_points, successive_minima};
use sqfree_core::squarefree::{check_large_square_bound, count_qf, count_squarefree_sieve, squarefree_report};
use sqfree_core::{Error, Result};

use crate::checks::{Check, Level};
use crate::{Cmd, Outcome, Plot};

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn ratio_f64(r: &Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn plain(result: Value) -> Outcome {
    Outcome { result, holds: None, table: None, plot: None }
}

/// `count` evenly spaced checkpoints in `1..=n`, ending at `n`.
fn checkpoints(n: u64, count: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (1..=count).map(|j| n * j / count).filter(|&x| x > 0).collect();
    v.dedup();
    v
}

pub(crate) fn dispatch(cmd: &Cmd, plot: bool) -> Result<Outcome> {
    match cmd {
        Cmd::Cf(a) => {
            let trace = compute_cf_trace(&a.poly, a.tol, CfConfig::default())?;
            let e = *trace.last().expect("nonempty trace");
            let mut o = plain(json!({
                "lo": e.lo,
                "hi": e.hi,
                "width": e.width(),
                "midpoint": e.midpoint(),
                "terms_used": e.terms_used,
            }));
            o.plot = Some(Plot {
                x: "prime_bound",
                y: "width",
                points: trace.iter().map(|t| (t.terms_used as f64, t.width())).collect(),
            });
            Ok(o)
        }
        Cmd::Sf(a) => {
            let tol = a.tol.unwrap_or(1.0 / (10.0 * a.n.max(1) as f64));
            let r = squarefree_report(&a.poly, a.n, a.method, tol)?;
            let mut o = plain(to_value(&r));
            if plot {
                let c = r.c_f_enclosure.midpoint();
                let points = checkpoints(a.n, 32)
                    .into_iter()
                    .map(|n| Ok((n as f64, count_squarefree_sieve(&a.poly, n)? as f64 - c * n as f64)))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "N", y: "S_f_minus_cfN", points });
            }
            Ok(o)
        }
        Cmd::Qf(a) => {
            let q = count_qf(&a.poly, a.s, a.n)?;
            let irreducible = match a.poly.is_irreducible() {
                Ok(b) => Some(b),
                Err(Error::Undecided(_)) => None,
                Err(e) => return Err(e),
            };
            let bound = if irreducible == Some(true) { Some(check_large_square_bound(&a.poly, a.s, a.n)?) } else { None };
            let mut o = plain(json!({ "Q_f": q, "irreducible": irreducible, "bound": bound }));
            if plot {
                let points = checkpoints(a.s, 32)
                    .into_iter()
                    .map(|s| Ok((s as f64, count_qf(&a.poly, s, a.n)? as f64)))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "S", y: "Q_f", points });
            }
            Ok(o)
        }
        Cmd::Countw(a) => {
            let w = count_w(&a.g, a.m, a.h, a.n)?;
            let check = if a.h <= a.m && a.g.content().map_or(false, |c| c == 1.into()) {
                Some(check_poly_box(&a.g, a.m, a.h, a.n)?)
            } else {
                None
            };
            let mut o = plain(json!({ "count": to_value(&w), "discrepancy_check": check }));
            o.holds = check.as_ref().map(|c| c.holds);
            if plot {
                let points = checkpoints(a.n, 32)
                    .into_iter()
                    .map(|n| Ok((n as f64, ratio_f64(&count_w(&a.g, a.m, a.h, n)?.residual))))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "N", y: "residual", points });
            }
            Ok(o)
        }
        Cmd::Countu(a) => {
            let u = count_u(a.k, a.m, a.h, a.n)?;
            let mut o = plain(to_value(&u));
            if plot {
                let points = checkpoints(a.n, 16)
                    .into_iter()
                    .map(|n| Ok((n as f64, ratio_f64(&count_u(a.k, a.m, a.h, n)?.residual))))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "N", y: "residual", points });
            }
            Ok(o)
        }
        Cmd::Avgu(a) => {
            let r = average_u_over_squarefree_q(a.k, a.h, a.n, a.q)?;
            let mut o = plain(to_value(&r));
            if plot {
                let points = r
                    .moduli
                    .iter()
                    .map(|&q| Ok((q as f64, count_u(a.k, q * q, a.h, a.n)?.value as f64)))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "q", y: "U", points });
            }
            Ok(o)
        }
        Cmd::Lattice(a) => {
            let l = build_lattice(a.k, a.m, a.n)?;
            let minima = successive_minima(&l)?;
            let mk = check_minkowski(&l, &minima);
            let mut holds = mk.lower_holds && mk.upper_holds && mk.first_holds;
            let boxed = match a.h {
                Some(h) => {
                    let sc = check_schmidt_count(&l, h)?;
                    holds &= sc.holds;
                    Some(json!({ "count": count_box_points(&l, h)?, "schmidt": sc }))
                }
                None => None,
            };
            let mut o = plain(json!({
                "basis": l.basis,
                "determinant": l.determinant().to_string(),
                "minima": minima,
                "lambdas": minima.lambdas(),
                "minkowski": mk,
                "box": boxed,
            }));
            o.holds = Some(holds);
            o.plot = Some(Plot {
                x: "j",
                y: "lambda_j",
                points: minima.lambdas().into_iter().enumerate().map(|(j, x)| ((j + 1) as f64, x)).collect(),
            });
            Ok(o)
        }
        Cmd::Weyl(a) => {
            let s = weyl_sum(&a.g, a.m, a.h, a.n)?;
            let bound = match a.g.degree() {
                Some(k) if k >= 2 && a.n > 0 => Some(check_weyl_bound(&a.g, a.m, a.h, a.n)?),
                _ => None,
            };
            let mut o = plain(json!({ "re": s.re, "im": s.im, "abs": s.norm(), "bound": bound }));
            if plot {
                let points = checkpoints(a.n, 64)
                    .into_iter()
                    .map(|n| Ok((n as f64, weyl_sum(&a.g, a.m, a.h, n)?.norm())))
                    .collect::<Result<_>>()?;
                o.plot = Some(Plot { x: "N", y: "abs_S", points });
            }
            Ok(o)
        }
        Cmd::Disc(a) => {
            let pts = PointSet::from_polynomial(&a.g, a.m, a.n)?;
            let d = discrepancy_exact(&pts)?;
            let rhs = a.l.map(|l| erdos_turan_rhs(&a.g, a.m, a.n, l)).transpose()?;
            let mut o = plain(json!({
                "discrepancy": d.to_string(),
                "discrepancy_f64": ratio_f64(&d),
                "erdos_turan_rhs": rhs,
            }));
            let mut sorted = pts.numerators.clone();
            sorted.sort_unstable();
            let n = pts.len() as f64;
            let mut points = Vec::new();
            for (i, &v) in sorted.iter().enumerate() {
                if sorted.get(i + 1) != Some(&v) {
                    let alpha = v as f64 / a.m as f64;
                    points.push((alpha, (i + 1) as f64 - alpha * n));
                }
            }
            o.plot = Some(Plot { x: "alpha", y: "count_minus_alpha_N", points });
            Ok(o)
        }
        Cmd::Experiment(a) => experiment(a),
        Cmd::Check(a) => {
            let mut outcomes = Vec::new();
            for c in Check::ALL {
                if c == Check::AveragedTrend && !a.trend {
                    continue;
                }
                outcomes.push(c.run(a.level, a.seed)?);
            }
            for o in &outcomes {
                eprintln!("{}", o.line());
            }
            let holds = outcomes.iter().all(|o| o.passed);
            let table = outcomes
                .iter()
                .map(|o| {
                    vec![
                        to_value(&o.check).as_str().unwrap_or_default().to_string(),
                        o.cases.to_string(),
                        o.failures.to_string(),
                        o.metric.map(|m| m.to_string()).unwrap_or_default(),
                        o.passed.to_string(),
                    ]
                })
                .collect();
            let points = outcomes.iter().enumerate().map(|(i, o)| (i as f64, if o.passed { 1.0 } else { 0.0 })).collect();
            let level = if a.level == Level::Full { "full" } else { "quick" };
            Ok(Outcome {
                result: json!({ "level": level, "checks": outcomes }),
                holds: Some(holds),
                table: Some((vec!["check", "cases", "failures", "metric", "passed"], table)),
                plot: Some(Plot { x: "check_index", y: "passed", points }),
            })
        }
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn experiment(a: &crate::ExperimentArgs) -> Result<Outcome> {
    let spec = match a.family {
        FamilyKind::Fk => {
            if a.g.is_some() {
                return Err(Error::Domain("--g applies to the gg family only".into()));
            }
            let k = a.k.ok_or_else(|| Error::Domain("the fk family needs --k".into()))?;
            FamilySpec::fk(k, a.h, a.seed, a.samples)
        }
        FamilyKind::Gg => {
            let g = a.g.clone().ok_or_else(|| Error::Domain("the gg family needs --g".into()))?;
            let spec = FamilySpec::gg(g, a.h, a.seed, a.samples);
            if a.k.map_or(false, |k| k != spec.k) {
                return Err(Error::Domain("--k disagrees with deg g".into()));
            }
            spec
        }
    };
    let report = match a.mode {
        Mode::Sampled => run_average_experiment(&spec, a.n)?,
        Mode::Exact => run_exact_average(&spec, a.n)?,
    };
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.sample_index.to_string(),
                r.coeffs.clone(),
                r.irreducible.clone(),
                opt(r.s_f),
                opt(r.cf_lo),
                opt(r.cf_hi),
                opt(r.err_lo),
                opt(r.err_hi),
            ]
        })
        .collect();
    let points = report
        .rows
        .iter()
        .filter_map(|r| Some((r.sample_index as f64, (r.err_lo? + r.err_hi?) / 2.0)))
        .collect();
    let bound_check = match (a.c, &report.aggregates, report.bound_rhs) {
        (Some(c), Some(agg), Some(rhs)) => {
            let mean = (agg.mean_lo + agg.mean_hi) / 2.0;
            let scaled = rhs * (report.n as f64).powf(0.1);
            Some(json!({ "C": c, "ratio": mean / scaled, "holds": mean <= c * scaled }))
        }
        _ => None,
    };
    let holds = bound_check.as_ref().map(|b| b["holds"] == true);
    let mut result = to_value(&report);
    result["bound_check"] = bound_check.unwrap_or(Value::Null);
    let header = vec!["sample_index", "coeffs", "irreducible", "S_f", "cf_lo", "cf_hi", "err_lo", "err_hi"];
    Ok(Outcome {
        result,
        holds,
        table: Some((header, rows)),
        plot: Some(Plot { x: "sample_index", y: "abs_error", points }),
    })
}
