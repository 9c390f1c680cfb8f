//! CPLEX-style LP text for models, and a reader for the same subset.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{IlpModel, LinExpr, Relation, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("LP line {line}: {message}")]
pub struct LpError {
    pub line: usize,
    pub message: String,
}

fn write_expr(out: &mut String, model: &IlpModel, expr: &LinExpr) {
    if expr.is_empty() {
        out.push('0');
        return;
    }
    for (k, &(v, c)) in expr.terms().iter().enumerate() {
        let name = &model.variables()[v].name;
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        match (k, sign) {
            (0, "+") => {}
            (0, _) => out.push_str("- "),
            _ => {
                out.push(' ');
                out.push_str(sign);
                out.push(' ');
            }
        }
        if mag != 1.0 {
            let _ = write!(out, "{mag} ");
        }
        out.push_str(name);
    }
}

/// Renders `model` in LP format: objective, one line per constraint, bounds
/// for general integers, then the binary and general sections when they are
/// non-empty. Everything is in declaration order.
pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n obj: ");
    write_expr(&mut out, model, model.objective());
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}: ", c.name);
        write_expr(&mut out, model, &c.expr);
        let _ = writeln!(out, " {} {}", c.rel.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    let generals: Vec<_> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .collect();
    for v in &generals {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    let binaries: Vec<_> = model
        .variables()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for v in binaries {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for v in generals {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
    Done,
}

fn section_of(line: &str) -> Option<Section> {
    match line.to_ascii_lowercase().as_str() {
        "maximize" | "maximise" | "max" => Some(Section::Objective),
        "subject to" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "generals" | "general" | "gen" => Some(Section::Generals),
        "end" => Some(Section::Done),
        _ => None,
    }
}

struct Parsed {
    terms: Vec<(String, f64)>,
    constant: f64,
}

fn parse_expr(text: &str, line: usize) -> Result<Parsed, LpError> {
    let err = |m: String| LpError { line, message: m };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for tok in text.split_whitespace() {
        if tok == "+" || tok == "-" {
            if let Some(c) = coef.take() {
                constant += sign * c;
                sign = 1.0;
            }
            if tok == "-" {
                sign = -sign;
            }
        } else if let Ok(x) = tok.parse::<f64>() {
            if coef.is_some() {
                return Err(err(format!("two numbers in a row at `{tok}`")));
            }
            coef = Some(x);
        } else if tok.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            terms.push((tok.to_string(), sign * coef.take().unwrap_or(1.0)));
            sign = 1.0;
        } else {
            return Err(err(format!("unexpected token `{tok}`")));
        }
    }
    if let Some(c) = coef {
        constant += sign * c;
    }
    Ok(Parsed { terms, constant })
}

/// Reads LP text in the subset written by [`export_lp`]. Variables missing
/// from the integrality sections are treated as general integers.
pub fn read_lp(text: &str) -> Result<IlpModel, LpError> {
    let mut model = IlpModel::new();
    let mut section = Section::None;
    let mut objective: Option<Parsed> = None;
    let mut constraints = Vec::new();
    let mut bounds: Vec<(String, f64, f64)> = Vec::new();
    let mut binaries = Vec::new();
    let mut generals = Vec::new();
    let mut order: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(s) = section_of(body) {
            if s == Section::Objective && section != Section::None {
                return Err(LpError {
                    line,
                    message: "objective section out of place".into(),
                });
            }
            section = s;
            continue;
        }
        if body.eq_ignore_ascii_case("minimize") || body.eq_ignore_ascii_case("minimise") {
            return Err(LpError {
                line,
                message: "only maximisation is supported".into(),
            });
        }
        let err = |m: &str| LpError {
            line,
            message: m.to_string(),
        };
        match section {
            Section::None => return Err(err("content before the objective section")),
            Section::Done => return Err(err("content after End")),
            Section::Objective => {
                let expr = body.split_once(':').map_or(body, |(_, e)| e);
                if objective.is_some() {
                    return Err(err("objective spans several lines"));
                }
                objective = Some(parse_expr(expr, line)?);
            }
            Section::Constraints => {
                let (name, rest) = body
                    .split_once(':')
                    .ok_or_else(|| err("constraint without a name"))?;
                let (rel, at, len) = ["<=", ">=", "=<", "=>", "="]
                    .iter()
                    .find_map(|op| rest.find(op).map(|at| (*op, at, op.len())))
                    .ok_or_else(|| err("constraint without a relation"))?;
                let rel = match rel {
                    "<=" | "=<" => Relation::Le,
                    ">=" | "=>" => Relation::Ge,
                    _ => Relation::Eq,
                };
                let lhs = parse_expr(&rest[..at], line)?;
                let rhs: f64 = rest[at + len..]
                    .trim()
                    .parse()
                    .map_err(|_| err("right-hand side is not a number"))?;
                constraints.push((name.trim().to_string(), lhs, rel, rhs, line));
            }
            Section::Bounds => {
                let parts: Vec<&str> = body.split_whitespace().collect();
                match parts.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        let lo = lo.parse().map_err(|_| err("bad lower bound"))?;
                        let hi = hi.parse().map_err(|_| err("bad upper bound"))?;
                        bounds.push((name.to_string(), lo, hi));
                    }
                    _ => return Err(err("expected `lo <= name <= hi`")),
                }
            }
            Section::Binaries => {
                for name in body.split_whitespace() {
                    binaries.push(name.to_string());
                    order.push(name.to_string());
                }
            }
            Section::Generals => {
                for name in body.split_whitespace() {
                    generals.push(name.to_string());
                    order.push(name.to_string());
                }
            }
        }
    }
    if section != Section::Done {
        return Err(LpError {
            line: text.lines().count(),
            message: "missing End".into(),
        });
    }

    // declare in section order, then anything only used in expressions
    let mut seen_names: Vec<String> = order;
    let obj = objective.ok_or(LpError {
        line: 0,
        message: "missing objective".into(),
    })?;
    for (n, _) in &obj.terms {
        seen_names.push(n.clone());
    }
    for (_, e, ..) in &constraints {
        for (n, _) in &e.terms {
            seen_names.push(n.clone());
        }
    }
    for name in seen_names {
        if model.variable(&name).is_some() {
            continue;
        }
        let is_bin = binaries.contains(&name);
        let (kind, lo, hi) = if is_bin {
            (VarKind::Binary, 0.0, 1.0)
        } else {
            let (lo, hi) = bounds
                .iter()
                .find(|b| b.0 == name)
                .map_or((0.0, f64::INFINITY), |b| (b.1, b.2));
            (VarKind::Integer, lo, hi)
        };
        model
            .add_variable(name, kind, lo, hi)
            .map_err(|e| LpError {
                line: 0,
                message: e.to_string(),
            })?;
    }
    let resolve = |p: &Parsed| {
        LinExpr::from_terms(
            p.terms
                .iter()
                .map(|(n, c)| (model.variable(n).unwrap(), *c)),
        )
    };
    let obj_expr = resolve(&obj);
    let built: Vec<_> = constraints
        .iter()
        .map(|(name, e, rel, rhs, _)| (name.clone(), resolve(e), *rel, rhs - e.constant))
        .collect();
    model.set_objective(obj_expr);
    for (name, expr, rel, rhs) in built {
        model.add_constraint(name, expr, rel, rhs, None);
    }
    Ok(model)
}
