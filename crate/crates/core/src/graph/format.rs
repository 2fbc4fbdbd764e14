//! Line-oriented graph description format.
//!
//! ```text
//! # diamond with a phase shifter on the lower arm
//! vertex 0 grover 3
//! vertex 1A free
//! vertex 1B phase 1.5707963267948966 free
//! vertex 2 grover 3
//! edge 0 1A
//! edge 0 1B
//! edge 1A 2
//! edge 1B 2 phase@2=0.25
//! tail_in 0
//! tail_out 2
//! ```
//!
//! Vertex kinds: `grover <degree>`, `free`, `two_port <re_t> <im_t> <re_r>
//! <im_r>`, `custom <entries>` where entries are `re im` pairs of the
//! row-major matrix, and `phase <phi> <kind...>`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{valid_label, EdgeSpec, GraphError, TailedGraph, VertexKind, VertexSpec};

fn syntax(line: usize, message: impl Into<String>) -> GraphError {
    GraphError::Syntax {
        line,
        message: message.into(),
    }
}

fn number(line: usize, tok: Option<&str>, what: &str) -> Result<f64, GraphError> {
    let tok = tok.ok_or_else(|| syntax(line, format!("expected {what}")))?;
    let x: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("`{tok}` is not a number ({what})")))?;
    if !x.is_finite() {
        return Err(syntax(line, format!("{what} must be finite")));
    }
    Ok(x)
}

fn parse_kind<'a>(line: usize, toks: &mut impl Iterator<Item = &'a str>) -> Result<VertexKind, GraphError> {
    let kind = toks.next().ok_or_else(|| syntax(line, "missing vertex kind"))?;
    match kind {
        "grover" => {
            let tok = toks.next().ok_or_else(|| syntax(line, "grover needs a degree"))?;
            let degree: usize = tok
                .parse()
                .map_err(|_| syntax(line, format!("`{tok}` is not a degree")))?;
            if degree == 0 {
                return Err(syntax(line, "grover degree must be positive"));
            }
            Ok(VertexKind::Grover { degree })
        }
        "free" => Ok(VertexKind::Free),
        "two_port" => {
            let re_t = number(line, toks.next(), "re_t")?;
            let im_t = number(line, toks.next(), "im_t")?;
            let re_r = number(line, toks.next(), "re_r")?;
            let im_r = number(line, toks.next(), "im_r")?;
            Ok(VertexKind::TwoPort {
                t: Complex64::new(re_t, im_t),
                r: Complex64::new(re_r, im_r),
            })
        }
        "custom" => {
            let values = toks
                .map(|t| number(line, Some(t), "matrix entry"))
                .collect::<Result<Vec<f64>, _>>()?;
            let entries = values.len() / 2;
            let dim = (entries as f64).sqrt().round() as usize;
            if values.is_empty() || values.len() % 2 != 0 || dim * dim != entries {
                return Err(syntax(
                    line,
                    format!("custom matrix needs 2*d*d numbers, got {}", values.len()),
                ));
            }
            let cplx: Vec<Complex64> = values.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            Ok(VertexKind::Custom {
                matrix: DMatrix::from_row_slice(dim, dim, &cplx),
            })
        }
        "phase" => {
            let phi = number(line, toks.next(), "phase")?;
            let inner = parse_kind(line, toks)?;
            Ok(VertexKind::Phase {
                phi,
                inner: Box::new(inner),
            })
        }
        other => Err(syntax(line, format!("unknown vertex kind `{other}`"))),
    }
}

fn label(line: usize, tok: Option<&str>) -> Result<String, GraphError> {
    let tok = tok.ok_or_else(|| syntax(line, "expected a vertex label"))?;
    if !valid_label(tok) {
        return Err(syntax(line, format!("invalid vertex label `{tok}`")));
    }
    Ok(tok.to_string())
}

/// Parses and validates a graph description.
pub fn parse_graph(text: &str) -> Result<TailedGraph, GraphError> {
    let mut vertices = Vec::new();
    let mut vertex_line = BTreeMap::new();
    let mut edges = Vec::new();
    let mut edge_line = Vec::new();
    let mut tail_in: Option<(String, usize)> = None;
    let mut tail_out: Option<(String, usize)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        let Some(keyword) = toks.next() else { continue };
        match keyword {
            "vertex" => {
                let l = label(line, toks.next())?;
                let kind = parse_kind(line, &mut toks)?;
                if let Some(extra) = toks.next() {
                    return Err(syntax(line, format!("unexpected `{extra}`")));
                }
                if vertex_line.insert(l.clone(), line).is_some() {
                    return Err(GraphError::DuplicateVertex(l).at_line(line));
                }
                vertices.push(VertexSpec::new(l, kind));
            }
            "edge" => {
                let a = label(line, toks.next())?;
                let b = label(line, toks.next())?;
                let mut edge = EdgeSpec::new(a, b);
                for tok in toks {
                    let spec = tok
                        .strip_prefix("phase@")
                        .ok_or_else(|| syntax(line, format!("unexpected `{tok}`")))?;
                    let (endpoint, phi) = spec
                        .split_once('=')
                        .ok_or_else(|| syntax(line, "phase shifter needs `phase@<label>=<phi>`"))?;
                    let phi = number(line, Some(phi), "phase")?;
                    edge.endpoint_phase.insert(endpoint.to_string(), phi);
                }
                edges.push(edge);
                edge_line.push(line);
            }
            "tail_in" | "tail_out" => {
                let l = label(line, toks.next())?;
                if let Some(extra) = toks.next() {
                    return Err(syntax(line, format!("unexpected `{extra}`")));
                }
                let slot = if keyword == "tail_in" {
                    &mut tail_in
                } else {
                    &mut tail_out
                };
                if slot.is_some() {
                    return Err(syntax(line, format!("`{keyword}` declared twice")));
                }
                *slot = Some((l, line));
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }

    let (entry, entry_line) = tail_in.ok_or(GraphError::MissingTail("tail_in"))?;
    let (exit, exit_line) = tail_out.ok_or(GraphError::MissingTail("tail_out"))?;

    TailedGraph::new(vertices, edges.clone(), entry.clone(), exit.clone()).map_err(|e| {
        // attach the most relevant source line
        let line = match &e {
            GraphError::DegreeMismatch { vertex, .. }
            | GraphError::NonUnitary { vertex, .. }
            | GraphError::NotSquare { vertex, .. }
            | GraphError::TwoPortNorm { vertex, .. } => vertex_line.get(vertex).copied(),
            GraphError::UnknownVertex(l) => {
                if !vertex_line.contains_key(l) && *l == entry {
                    Some(entry_line)
                } else if !vertex_line.contains_key(l) && *l == exit {
                    Some(exit_line)
                } else {
                    edges
                        .iter()
                        .position(|ed| &ed.a == l || &ed.b == l)
                        .map(|i| edge_line[i])
                }
            }
            GraphError::SelfLoop(l) => edges
                .iter()
                .position(|ed| &ed.a == l && &ed.b == l)
                .map(|i| edge_line[i]),
            GraphError::DuplicateEdge(a, b) => edges
                .iter()
                .rposition(|ed| (&ed.a == a && &ed.b == b) || (&ed.a == b && &ed.b == a))
                .map(|i| edge_line[i]),
            GraphError::PhaseEndpoint { a, b, .. } => edges
                .iter()
                .position(|ed| &ed.a == a && &ed.b == b)
                .map(|i| edge_line[i]),
            _ => None,
        };
        match line {
            Some(line) => e.at_line(line),
            None => e,
        }
    })
}

fn write_kind(out: &mut String, kind: &VertexKind) {
    match kind {
        VertexKind::Grover { degree } => write!(out, "grover {degree}").unwrap(),
        VertexKind::Free => out.push_str("free"),
        VertexKind::TwoPort { t, r } => write!(out, "two_port {} {} {} {}", t.re, t.im, r.re, r.im).unwrap(),
        VertexKind::Custom { matrix } => {
            out.push_str("custom");
            for i in 0..matrix.nrows() {
                for j in 0..matrix.ncols() {
                    let z = matrix[(i, j)];
                    write!(out, " {} {}", z.re, z.im).unwrap();
                }
            }
        }
        VertexKind::Phase { phi, inner } => {
            write!(out, "phase {phi} ").unwrap();
            write_kind(out, inner);
        }
    }
}

/// Writes a graph in the format accepted by [`parse_graph`]. Floats use the
/// shortest representation that parses back to the same value.
pub fn serialize_graph(graph: &TailedGraph) -> String {
    let mut out = String::new();
    for v in graph.vertices() {
        write!(out, "vertex {} ", v.label).unwrap();
        write_kind(&mut out, &v.kind);
        out.push('\n');
    }
    for e in graph.edges() {
        write!(out, "edge {} {}", e.a, e.b).unwrap();
        for (endpoint, phi) in &e.endpoint_phase {
            write!(out, " phase@{endpoint}={phi}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "tail_in {}", graph.entry()).unwrap();
    writeln!(out, "tail_out {}", graph.exit()).unwrap();
    out
}
