//! Bridge to an external solver via LP and solution files.
//!
//! The command is run as `<cmd> <lp-path> <sol-path> <seconds>`, where
//! `seconds` is the remaining time rounded up to a whole second. A warm
//! start, when the model carries one, is written next to the LP file with
//! the `.mst` extension. The solution file holds `name value` lines; an
//! optional `# status <optimal|feasible|infeasible|timeout>` line reports
//! the solver's verdict and other `#` lines are comments.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::model::IlpModel;

use super::lp::export_lp;
use super::{SolveError, SolveStatus, INTEGRALITY_TOL};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionFile {
    pub status: Option<SolveStatus>,
    pub values: BTreeMap<String, f64>,
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, SolveError> {
    let mut out = SolutionFile::default();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("status") {
                let word = words.next().unwrap_or("");
                out.status = Some(word.parse().map_err(|e: String| {
                    SolveError::Bridge(format!("solution line {}: {e}", idx + 1))
                })?);
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(SolveError::Bridge(format!(
                "solution line {}: expected `name value`",
                idx + 1
            )));
        };
        let value: f64 = value.parse().map_err(|_| {
            SolveError::Bridge(format!(
                "solution line {}: `{value}` is not a number",
                idx + 1
            ))
        })?;
        out.values.insert(name.to_string(), value);
    }
    Ok(out)
}

pub fn write_solution<'a>(
    status: Option<SolveStatus>,
    values: impl IntoIterator<Item = (&'a str, f64)>,
) -> String {
    let mut out = String::new();
    if let Some(s) = status {
        out.push_str(&format!("# status {s}\n"));
    }
    for (name, v) in values {
        out.push_str(&format!("{name} {v}\n"));
    }
    out
}

fn tail(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap_or_default();
    let lines: Vec<&str> = text.lines().collect();
    lines[lines.len().saturating_sub(5)..].join("\n")
}

pub(super) fn solve(
    model: &IlpModel,
    cmd: &Path,
    deadline: Instant,
) -> Result<(SolveStatus, Option<Vec<f64>>), SolveError> {
    let dir = tempfile::Builder::new().prefix("stabmatch").tempdir()?;
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("model.sol");
    let err_log = dir.path().join("stderr.log");
    fs::write(&lp, export_lp(model))?;
    if let Some(warm) = model.warm_values() {
        let names = model.variables().iter().map(|v| v.name.as_str());
        fs::write(
            dir.path().join("model.mst"),
            write_solution(None, names.zip(warm)),
        )?;
    }

    let remaining = deadline.saturating_duration_since(Instant::now());
    if remaining.is_zero() {
        return Ok((SolveStatus::Timeout, None));
    }
    let seconds = remaining.as_secs() + u64::from(remaining.subsec_nanos() > 0);
    let mut child = Command::new(cmd)
        .arg(&lp)
        .arg(&sol)
        .arg(seconds.to_string())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::from(File::create(&err_log)?))
        .spawn()
        .map_err(|e| SolveError::Bridge(format!("cannot run {}: {e}", cmd.display())))?;
    let exit = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            let _ = child.wait();
            return Ok((SolveStatus::Timeout, None));
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    if !exit.success() {
        return Err(SolveError::Bridge(format!(
            "solver exited with {exit}: {}",
            tail(&err_log)
        )));
    }
    let text = fs::read_to_string(&sol)
        .map_err(|e| SolveError::Bridge(format!("cannot read solution file: {e}")))?;
    let parsed = parse_solution(&text)?;
    if parsed.status == Some(SolveStatus::Infeasible) {
        return Ok((SolveStatus::Infeasible, None));
    }
    if parsed.status == Some(SolveStatus::Timeout) && parsed.values.is_empty() {
        return Ok((SolveStatus::Timeout, None));
    }
    let values: Vec<f64> = model
        .variables()
        .iter()
        .map(|v| parsed.values.get(&v.name).copied().unwrap_or(0.0))
        .collect();
    model
        .check_assignment(&values, INTEGRALITY_TOL)
        .map_err(|e| SolveError::Bridge(format!("solution rejected: {e}")))?;
    let values = values.into_iter().map(f64::round).collect();
    Ok((parsed.status.unwrap_or(SolveStatus::Optimal), Some(values)))
}
