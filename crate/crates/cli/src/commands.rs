use std::f64::consts::TAU;

use edgewalk::oracles::self_test as oracle_checks;
use edgewalk::scattering::{amplitudes_at, build_problem, hitting_statistics, taylor_coefficients, SMatrixSolver};
use edgewalk::symmetry::{check_invariance, classify_bound_states, BoundReversal, SYMMETRY_SAMPLES};
use edgewalk::walk::{distribution, evolve, monitored_walk};
use edgewalk::{Complex64, Direction, OrientedEdge, StepOperator, TailedGraph, WalkState};
use serde_json::{json, Value};

use crate::output::{complex, fmt, num, Csv};
use crate::{CliError, Format};

fn render(format: Format, csv: impl FnOnce() -> String, value: impl FnOnce() -> Value) -> String {
    match format {
        Format::Csv => csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&value()).expect("JSON values serialize");
            s.push('\n');
            s
        }
    }
}

/// Largest tail distance named in an edge label `A,B`; 0 for interior edges.
fn label_depth(text: &str) -> usize {
    text.split(',')
        .filter_map(|node| {
            let node = node.trim();
            node.strip_prefix("tail_in:")
                .or_else(|| node.strip_prefix("tail_out:"))
                .and_then(|d| d.parse::<usize>().ok())
        })
        .max()
        .unwrap_or(0)
}

fn circle_theta(k: usize, n: usize) -> f64 {
    TAU * (k as f64 + 0.5) / n as f64
}

pub fn simulate(
    graph: &TailedGraph,
    steps: usize,
    monitor: &[String],
    start: Option<&str>,
    direction: Direction,
    format: Format,
) -> Result<String, CliError> {
    // Window keeps the start edge `steps + 1` away from the reflecting ends.
    let start_depth = start.map_or(1, label_depth);
    let tail = monitor
        .iter()
        .map(|m| label_depth(m))
        .fold(start_depth + steps + 1, usize::max);
    let op = StepOperator::for_graph(graph, tail).map_err(CliError::compute)?;
    let basis = op.basis().clone();
    let parse = |text: &str| -> Result<OrientedEdge, CliError> {
        basis
            .parse_edge(text)
            .ok_or_else(|| CliError::Usage(format!("`{text}` is not an oriented edge of this graph")))
    };
    let start_edge = match start {
        Some(s) => parse(s)?,
        None => basis.injection_edge(direction),
    };
    let psi = WalkState::basis_state(basis.clone(), start_edge).expect("edge is in the basis");

    if monitor.is_empty() {
        let state = evolve(&op, &psi, steps).map_err(CliError::compute)?;
        let dist = distribution(&state);
        let labelled: Vec<(String, f64)> = dist.iter().map(|p| (basis.edge_label(p.edge), p.probability)).collect();
        return Ok(render(
            format,
            || {
                let mut csv = Csv::new(&["edge", "probability"]);
                for (edge, p) in &labelled {
                    csv.row(&[edge.clone(), fmt(*p)]);
                }
                csv.finish()
            },
            || {
                json!({
                    "steps": steps,
                    "start": basis.edge_label(start_edge),
                    "distribution": labelled
                        .iter()
                        .map(|(edge, p)| json!({ "edge": edge, "probability": num(*p) }))
                        .collect::<Vec<_>>(),
                })
            },
        ));
    }

    let edges = monitor.iter().map(|m| parse(m)).collect::<Result<Vec<_>, _>>()?;
    let records = monitored_walk(&op, &psi, &edges, steps).map_err(CliError::compute)?;
    Ok(render(
        format,
        || {
            let mut csv = Csv::new(&["n", "p_survive", "q_arrive"]);
            for r in &records {
                csv.row(&[r.n.to_string(), fmt(r.p_survive), fmt(r.q_arrive)]);
            }
            csv.finish()
        },
        || {
            json!({
                "steps": steps,
                "start": basis.edge_label(start_edge),
                "monitor": edges.iter().map(|e| basis.edge_label(*e)).collect::<Vec<_>>(),
                "records": records
                    .iter()
                    .map(|r| json!({ "n": r.n, "p_survive": num(r.p_survive), "q_arrive": num(r.q_arrive) }))
                    .collect::<Vec<_>>(),
            })
        },
    ))
}

pub fn scatter(graph: &TailedGraph, samples: usize, direction: Direction, format: Format) -> Result<String, CliError> {
    let problem = build_problem(graph, direction).map_err(CliError::compute)?;
    let rows = (0..samples)
        .map(|k| {
            let theta = circle_theta(k, samples);
            amplitudes_at(&problem, Complex64::from_polar(1.0, theta)).map(|a| (theta, a.t, a.r))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::compute)?;
    Ok(render(
        format,
        || {
            let mut csv = Csv::new(&["theta", "re_t", "im_t", "re_r", "im_r", "norm"]);
            for (theta, t, r) in &rows {
                csv.row(&[
                    fmt(*theta),
                    fmt(t.re),
                    fmt(t.im),
                    fmt(r.re),
                    fmt(r.im),
                    fmt(t.norm_sqr() + r.norm_sqr()),
                ]);
            }
            csv.finish()
        },
        || {
            Value::Array(
                rows.iter()
                    .map(|(theta, t, r)| {
                        json!({
                            "theta": num(*theta),
                            "t": complex(*t),
                            "r": complex(*r),
                            "norm": num(t.norm_sqr() + r.norm_sqr()),
                        })
                    })
                    .collect(),
            )
        },
    ))
}

pub fn hitting_time(
    graph: &TailedGraph,
    n_max: usize,
    direction: Direction,
    format: Format,
) -> Result<String, CliError> {
    let problem = build_problem(graph, direction).map_err(CliError::compute)?;
    let series = taylor_coefficients(&problem, n_max).map_err(CliError::compute)?;
    let stats = hitting_statistics(&series).map_err(CliError::compute)?;
    let q = series.q();
    let summary = [
        ("P_out", stats.p_out),
        ("h", stats.h),
        ("tail_bound", stats.tail_bound),
        ("radius", series.radius),
        ("coefficient_residual", series.residual),
    ];
    Ok(render(
        format,
        || {
            let mut csv = Csv::new(&["n", "q"]);
            for (n, qn) in q.iter().enumerate().skip(1) {
                csv.row(&[n.to_string(), fmt(*qn)]);
            }
            let mut text = csv.finish();
            text.push('\n');
            let mut tail = Csv::new(&["statistic", "value"]);
            for (name, value) in summary {
                tail.row(&[name.to_string(), fmt(value)]);
            }
            text.push_str(&tail.finish());
            text
        },
        || {
            json!({
                "n_max": n_max,
                "q": q.iter().skip(1).map(|x| num(*x)).collect::<Vec<_>>(),
                "p_out": num(stats.p_out),
                "h": num(stats.h),
                "tail_bound": num(stats.tail_bound),
                "circle_p_out": stats.circle_p_out.map(num),
                "radius": num(series.radius),
                "samples": series.samples(),
                "coefficient_residual": num(series.residual),
            })
        },
    ))
}

/// Rotates `v` so its first largest component is real and positive.
fn fix_phase(v: &[Complex64]) -> Vec<Complex64> {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    match v.iter().find(|x| x.norm() > max * (1.0 - 1e-9)) {
        Some(pivot) if max > 0.0 => {
            let phase = pivot.conj() / pivot.norm();
            v.iter().map(|x| x * phase).collect()
        }
        _ => v.to_vec(),
    }
}

fn reversal_name(kind: BoundReversal) -> &'static str {
    match kind {
        BoundReversal::SelfConjugate => "self_conjugate",
        BoundReversal::Degenerate => "degenerate",
        BoundReversal::Broken => "broken",
    }
}

pub fn bound_states(graph: &TailedGraph, format: Format) -> Result<String, CliError> {
    let problem = build_problem(graph, Direction::Left).map_err(CliError::compute)?;
    let basis = problem.basis().clone();
    let reversal = classify_bound_states(&problem);
    let states: Vec<(Complex64, Vec<Complex64>, &'static str)> = problem
        .bound_states()
        .iter()
        .zip(&reversal)
        .map(|(b, rev)| (b.eigenvalue, fix_phase(b.vector.as_slice()), reversal_name(rev.kind)))
        .collect();
    Ok(render(
        format,
        || {
            let mut csv = Csv::new(&["index", "re_eigenvalue", "im_eigenvalue", "edge", "re", "im"]);
            for (i, (lambda, v, _)) in states.iter().enumerate() {
                for (j, a) in v.iter().enumerate() {
                    csv.row(&[
                        i.to_string(),
                        fmt(lambda.re),
                        fmt(lambda.im),
                        basis.edge_label(basis.edge(j)),
                        fmt(a.re),
                        fmt(a.im),
                    ]);
                }
            }
            csv.finish()
        },
        || {
            json!({
                "count": states.len(),
                "bound_states": states
                    .iter()
                    .map(|(lambda, v, kind)| {
                        json!({
                            "eigenvalue": complex(*lambda),
                            "arg": num(lambda.arg()),
                            "time_reversal": kind,
                            "vector": v
                                .iter()
                                .enumerate()
                                .map(|(j, a)| json!({ "edge": basis.edge_label(basis.edge(j)), "re": num(a.re), "im": num(a.im) }))
                                .collect::<Vec<_>>(),
                        })
                    })
                    .collect::<Vec<_>>(),
            })
        },
    ))
}

pub fn tri_check(graph: &TailedGraph, format: Format) -> Result<String, CliError> {
    let op = StepOperator::for_graph(graph, 1).map_err(CliError::compute)?;
    let report = check_invariance(&op);
    let solver = SMatrixSolver::new(graph).map_err(CliError::compute)?;
    let table = (0..SYMMETRY_SAMPLES)
        .map(|k| {
            let theta = circle_theta(k, SYMMETRY_SAMPLES);
            solver.at(theta).map(|s| (theta, s[(1, 0)], s[(0, 1)]))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::compute)?;
    let max_diff = table.iter().map(|(_, l, r)| (l - r).norm()).fold(0.0, f64::max);
    let witness = report
        .witness
        .as_ref()
        .map(|w| format!("{}:{}/{}", w.vertex, w.ports.0, w.ports.1));
    Ok(render(
        format,
        || {
            let mut csv = Csv::new(&["theta", "re_t_left", "im_t_left", "re_t_right", "im_t_right"]);
            for (theta, l, r) in &table {
                csv.row(&[fmt(*theta), fmt(l.re), fmt(l.im), fmt(r.re), fmt(r.im)]);
            }
            let mut text = csv.finish();
            text.push('\n');
            let mut summary = Csv::new(&["statistic", "value"]);
            summary.row(&["invariant".into(), report.invariant.to_string()]);
            summary.row(&["worst_violation".into(), fmt(report.worst_violation)]);
            summary.row(&["witness".into(), witness.clone().unwrap_or_default()]);
            summary.row(&["max_diff".into(), fmt(max_diff)]);
            text.push_str(&summary.finish());
            text
        },
        || {
            json!({
                "invariant": report.invariant,
                "worst_violation": num(report.worst_violation),
                "witness": report.witness.as_ref().map(|w| json!({
                    "vertex": w.vertex,
                    "ports": [w.ports.0, w.ports.1],
                })),
                "max_diff": num(max_diff),
                "transmission": table
                    .iter()
                    .map(|(theta, l, r)| json!({ "theta": num(*theta), "t_left": complex(*l), "t_right": complex(*r) }))
                    .collect::<Vec<_>>(),
            })
        },
    ))
}

/// Output text and whether every check passed.
pub fn self_test(format: Format) -> (String, bool) {
    let checks = oracle_checks();
    let passed = checks.iter().all(|c| c.passed);
    let text = render(
        format,
        || {
            let mut csv = Csv::new(&["check", "error", "tolerance", "status"]);
            for c in &checks {
                let status = if c.passed { "PASS" } else { "FAIL" };
                csv.row(&[c.name.to_string(), fmt(c.error), fmt(c.tolerance), status.to_string()]);
            }
            csv.finish()
        },
        || {
            json!({
                "passed": passed,
                "checks": checks
                    .iter()
                    .map(|c| json!({
                        "name": c.name,
                        "error": num(c.error),
                        "tolerance": num(c.tolerance),
                        "passed": c.passed,
                        "detail": c.detail,
                    }))
                    .collect::<Vec<_>>(),
            })
        },
    );
    (text, passed)
}
