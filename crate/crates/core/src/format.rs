//! Line-oriented text formats for instances and matchings.
//!
//! ```text
//! # comment
//! SMTI 2 2
//! 1 2          <- row 1 prefers column 1, then column 2
//! (1 2)        <- row 2 is indifferent between them
//! 1 2
//! 2 1
//! ```
//!
//! `HRT n1 n2` adds one line of capacities before the lists. `GRP n1 n2 m`
//! is followed by `m` lines `row col weight`. Inside the list section an
//! empty line is an empty list; lines holding only a comment are skipped.

use std::fmt::Write as _;

use crate::instance::{GrpInstance, Instance, InstanceError};
use crate::matching::Matching;

/// Result of parsing an instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedInstance {
    Lists(Instance),
    Grp(GrpInstance),
}

struct Line<'a> {
    number: usize,
    body: &'a str,
    comment_only: bool,
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().map(|(k, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        Line {
            number: k + 1,
            body,
            comment_only: raw.trim_start().starts_with('#'),
        }
    })
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(body: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (k, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &body[s..k]));
            }
        } else if start.is_none() {
            start = Some(k);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &body[s..]));
    }
    out
}

fn parse_count(line: usize, col: usize, tok: &str) -> Result<usize, InstanceError> {
    tok.parse::<usize>().map_err(|_| {
        syntax(
            line,
            col,
            format!("expected a non-negative integer, found `{tok}`"),
        )
    })
}

fn parse_index(line: usize, col: usize, tok: &str, bound: usize) -> Result<usize, InstanceError> {
    let v = tok
        .parse::<usize>()
        .map_err(|_| syntax(line, col, format!("expected an index, found `{tok}`")))?;
    if v == 0 || v > bound {
        return Err(InstanceError::IndexOutOfRange {
            line,
            column: col,
            index: v,
            bound,
        });
    }
    Ok(v - 1)
}

/// Parses one preference list: singletons and parenthesised tie groups.
fn parse_list(line: usize, body: &str, bound: usize) -> Result<Vec<Vec<usize>>, InstanceError> {
    let mut groups = Vec::new();
    let mut open: Option<(usize, Vec<usize>)> = None;
    let mut num_start: Option<usize> = None;
    let mut seen = std::collections::HashSet::new();

    let mut flush = |start: usize,
                     end: usize,
                     open: &mut Option<(usize, Vec<usize>)>,
                     groups: &mut Vec<Vec<usize>>|
     -> Result<(), InstanceError> {
        let idx = parse_index(line, start + 1, &body[start..end], bound)?;
        if !seen.insert(idx) {
            return Err(syntax(
                line,
                start + 1,
                format!("duplicate partner {}", idx + 1),
            ));
        }
        match open {
            Some((_, g)) => g.push(idx),
            None => groups.push(vec![idx]),
        }
        Ok(())
    };

    for (k, ch) in body
        .char_indices()
        .chain(std::iter::once((body.len(), ' ')))
    {
        let is_digit = ch.is_ascii_alphanumeric() || ch == '-' || ch == '.' || ch == '+';
        if is_digit {
            num_start.get_or_insert(k);
            continue;
        }
        if let Some(s) = num_start.take() {
            flush(s, k, &mut open, &mut groups)?;
        }
        match ch {
            '(' => {
                if open.is_some() {
                    return Err(syntax(line, k + 1, "nested `(`"));
                }
                open = Some((k + 1, Vec::new()));
            }
            ')' => match open.take() {
                Some((col, g)) => {
                    if g.is_empty() {
                        return Err(syntax(line, col, "empty tie group"));
                    }
                    groups.push(g);
                }
                None => return Err(syntax(line, k + 1, "unmatched `)`")),
            },
            c if c.is_whitespace() => {}
            c => return Err(syntax(line, k + 1, format!("unexpected character `{c}`"))),
        }
    }
    if let Some((col, _)) = open {
        return Err(syntax(line, col, "unclosed `(`"));
    }
    Ok(groups)
}

/// Parses an instance file in any of the three formats.
pub fn parse_instance(text: &str) -> Result<ParsedInstance, InstanceError> {
    let mut it = lines(text).peekable();
    let header = loop {
        match it.next() {
            Some(l) if l.body.trim().is_empty() => continue,
            Some(l) => break l,
            None => return Err(syntax(1, 1, "missing header")),
        }
    };
    let toks = tokens(header.body);
    let ln = header.number;
    let kind = toks[0].1;
    let expect_args = if kind == "GRP" { 3 } else { 2 };
    if !matches!(kind, "SMTI" | "HRT" | "GRP") {
        return Err(syntax(
            ln,
            toks[0].0,
            format!("unknown instance kind `{kind}` (expected SMTI, HRT or GRP)"),
        ));
    }
    if toks.len() != expect_args + 1 {
        return Err(syntax(
            ln,
            1,
            format!("`{kind}` header takes {expect_args} numbers"),
        ));
    }
    let n1 = parse_count(ln, toks[1].0, toks[1].1)?;
    let n2 = parse_count(ln, toks[2].0, toks[2].1)?;

    if kind == "GRP" {
        let m = parse_count(ln, toks[3].0, toks[3].1)?;
        let mut pairs = Vec::with_capacity(m);
        let mut seen = std::collections::HashSet::new();
        let mut last_line = ln;
        for l in it.by_ref() {
            last_line = l.number;
            if l.body.trim().is_empty() {
                continue;
            }
            if pairs.len() == m {
                return Err(syntax(l.number, 1, format!("more than {m} pair lines")));
            }
            let t = tokens(l.body);
            if t.len() != 3 {
                return Err(syntax(l.number, 1, "expected `row col weight`"));
            }
            let i = parse_index(l.number, t[0].0, t[0].1, n1)?;
            let j = parse_index(l.number, t[1].0, t[1].1, n2)?;
            let w: f64 = t[2].1.parse().map_err(|_| {
                syntax(
                    l.number,
                    t[2].0,
                    format!("expected a weight, found `{}`", t[2].1),
                )
            })?;
            if !w.is_finite() {
                return Err(syntax(l.number, t[2].0, "weight must be finite"));
            }
            if !seen.insert((i, j)) {
                return Err(syntax(
                    l.number,
                    1,
                    format!("pair ({}, {}) repeated", i + 1, j + 1),
                ));
            }
            pairs.push((i, j, w));
        }
        if pairs.len() != m {
            return Err(syntax(
                last_line + 1,
                1,
                format!("expected {m} pair lines, found {}", pairs.len()),
            ));
        }
        return GrpInstance::new(n1, n2, pairs).map(ParsedInstance::Grp);
    }

    let capacities = if kind == "HRT" {
        let l = loop {
            match it.next() {
                Some(l) if l.body.trim().is_empty() => continue,
                Some(l) => break l,
                None => return Err(syntax(ln + 1, 1, "missing capacity line")),
            }
        };
        let t = tokens(l.body);
        if t.len() != n2 {
            return Err(syntax(
                l.number,
                1,
                format!("expected {n2} capacities, found {}", t.len()),
            ));
        }
        let mut caps = Vec::with_capacity(n2);
        for (h, (col, tok)) in t.into_iter().enumerate() {
            let v: i64 = tok.parse().map_err(|_| {
                syntax(l.number, col, format!("expected a capacity, found `{tok}`"))
            })?;
            if v <= 0 {
                return Err(InstanceError::NonPositiveCapacity { hospital: h + 1 });
            }
            caps.push(v as usize);
        }
        Some(caps)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(n1);
    let mut cols = Vec::with_capacity(n2);
    let mut last_line = ln;
    while rows.len() + cols.len() < n1 + n2 {
        let Some(l) = it.next() else {
            return Err(syntax(
                last_line + 1,
                1,
                format!(
                    "expected {} preference lists, found {}",
                    n1 + n2,
                    rows.len() + cols.len()
                ),
            ));
        };
        last_line = l.number;
        if l.comment_only {
            continue;
        }
        if rows.len() < n1 {
            rows.push(parse_list(l.number, l.body, n2)?);
        } else {
            cols.push(parse_list(l.number, l.body, n1)?);
        }
    }
    if let Some(l) = it.find(|l| !l.body.trim().is_empty()) {
        return Err(syntax(
            l.number,
            1,
            "unexpected content after the last list",
        ));
    }
    Instance::from_groups(rows, cols, capacities).map(ParsedInstance::Lists)
}

fn write_list(out: &mut String, groups: &[Vec<usize>]) {
    let mut first = true;
    for g in groups {
        if !first {
            out.push(' ');
        }
        first = false;
        if g.len() == 1 {
            let _ = write!(out, "{}", g[0] + 1);
        } else {
            out.push('(');
            for (k, p) in g.iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{}", p + 1);
            }
            out.push(')');
        }
    }
    out.push('\n');
}

/// Serializes an SMTI or HRT instance.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    match inst.capacities() {
        Some(caps) => {
            let _ = writeln!(out, "HRT {} {}", inst.n1(), inst.n2());
            let caps: Vec<String> = caps.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", caps.join(" "));
        }
        None => {
            let _ = writeln!(out, "SMTI {} {}", inst.n1(), inst.n2());
        }
    }
    for i in 0..inst.n1() {
        write_list(&mut out, inst.row_prefs(i).groups());
    }
    for j in 0..inst.n2() {
        write_list(&mut out, inst.col_prefs(j).groups());
    }
    out
}

/// Serializes a GRP instance; weights use the shortest round-trip decimal.
pub fn write_grp(g: &GrpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "GRP {} {} {}", g.n1(), g.n2(), g.pairs().len());
    for &(i, j, w) in g.pairs() {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, w);
    }
    out
}

/// Parses a matching file: one `row col` pair per line, 1-based.
pub fn parse_matching(text: &str) -> Result<Matching, InstanceError> {
    let mut m = Matching::new();
    for l in lines(text) {
        let t = tokens(l.body);
        if t.is_empty() {
            continue;
        }
        if t.len() != 2 {
            return Err(syntax(l.number, 1, "expected `row col`"));
        }
        let i = parse_index(l.number, t[0].0, t[0].1, usize::MAX)?;
        let j = parse_index(l.number, t[1].0, t[1].1, usize::MAX)?;
        m.insert(i, j);
    }
    Ok(m)
}

pub fn write_matching(m: &Matching) -> String {
    let mut out = String::new();
    for (i, j) in m.pairs() {
        let _ = writeln!(out, "{} {}", i + 1, j + 1);
    }
    out
}
