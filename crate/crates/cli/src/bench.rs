//! Batch runs from a manifest, one CSV row per run.
//!
//! A manifest line is `<instance> <preset> [flags...]` with the same flags as
//! `solve`; `#` starts a comment. Relative instance paths are resolved
//! against the manifest's directory. Flags given to `bench` itself apply to
//! every row unless the row sets them.
//!
//! CSV columns, in order: `instance, preset, status, objective, wall_time,
//! variables, constraints, nonzeros, removals, warm_start, message`. Empty
//! cells mean "not available". The per-preset summary follows the rows as
//! `#` comment lines.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Parser;
use rayon::prelude::*;

use crate::flags::SharedFlags;
use crate::pipeline::{read_instance, run};

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// The instance as written in the manifest.
    pub label: String,
    pub path: PathBuf,
    pub preset: String,
    pub flags: SharedFlags,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct RowArgs {
    #[command(flatten)]
    flags: SharedFlags,
}

pub fn parse_manifest(text: &str, base: &Path) -> anyhow::Result<Vec<ManifestRow>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let [label, preset, rest @ ..] = tokens.as_slice() else {
            if tokens.is_empty() {
                continue;
            }
            bail!(
                "manifest line {}: expected `<instance> <preset> [flags]`",
                idx + 1
            );
        };
        let mut flags = RowArgs::try_parse_from(rest.iter().copied())
            .with_context(|| format!("manifest line {}", idx + 1))?
            .flags;
        flags.model = Some(preset.to_string());
        rows.push(ManifestRow {
            label: label.to_string(),
            path: base.join(label),
            preset: preset.to_string(),
            flags,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub instance: String,
    pub preset: String,
    /// A solve status, or `error`.
    pub status: String,
    pub objective: Option<f64>,
    pub wall_time: Option<f64>,
    pub variables: Option<usize>,
    pub constraints: Option<usize>,
    pub nonzeros: Option<usize>,
    pub removals: Option<usize>,
    pub warm_start: Option<f64>,
    pub message: String,
}

pub const HEADER: [&str; 11] = [
    "instance",
    "preset",
    "status",
    "objective",
    "wall_time",
    "variables",
    "constraints",
    "nonzeros",
    "removals",
    "warm_start",
    "message",
];

fn cell<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |x| x.to_string())
}

impl ExperimentRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.preset.clone(),
            self.status.clone(),
            cell(self.objective),
            cell(self.wall_time.map(|t| format!("{t:.3}"))),
            cell(self.variables),
            cell(self.constraints),
            cell(self.nonzeros),
            cell(self.removals),
            cell(self.warm_start),
            self.message.clone(),
        ]
    }
}

pub fn run_row(row: &ManifestRow, defaults: &SharedFlags) -> ExperimentRow {
    let mut out = ExperimentRow {
        instance: row.label.clone(),
        preset: row.preset.clone(),
        status: "error".into(),
        objective: None,
        wall_time: None,
        variables: None,
        constraints: None,
        nonzeros: None,
        removals: None,
        warm_start: None,
        message: String::new(),
    };
    let opts = match defaults.overlay(&row.flags).resolve() {
        Ok(o) => o,
        Err(e) => {
            out.message = e.to_string();
            return out;
        }
    };
    let result = read_instance(&row.path, opts.threshold).and_then(|l| run(&l, &opts));
    match result {
        Ok(r) => {
            out.status = r.status.to_string();
            out.objective = r.objective;
            out.wall_time = Some(r.wall_time);
            out.variables = Some(r.stats.variables);
            out.constraints = Some(r.stats.constraints);
            out.nonzeros = Some(r.stats.nonzeros);
            out.removals = Some(r.removals);
            out.warm_start = r.warm_start;
        }
        Err(e) => out.message = e.to_string(),
    }
    out
}

/// Runs every row on `workers` threads; results keep manifest order.
pub fn run_bench(
    rows: &[ManifestRow],
    defaults: &SharedFlags,
    workers: usize,
) -> anyhow::Result<Vec<ExperimentRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    Ok(pool.install(|| rows.par_iter().map(|r| run_row(r, defaults)).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetSummary {
    pub preset: String,
    pub runs: usize,
    pub optimal: usize,
    /// Mean over runs that produced a time.
    pub mean_time: Option<f64>,
}

/// Per preset, in order of first appearance.
pub fn summarize(rows: &[ExperimentRow]) -> Vec<PresetSummary> {
    let mut out: Vec<(PresetSummary, f64, usize)> = Vec::new();
    for r in rows {
        let k = match out.iter().position(|(s, ..)| s.preset == r.preset) {
            Some(k) => k,
            None => {
                let s = PresetSummary {
                    preset: r.preset.clone(),
                    runs: 0,
                    optimal: 0,
                    mean_time: None,
                };
                out.push((s, 0.0, 0));
                out.len() - 1
            }
        };
        let (s, total, timed) = &mut out[k];
        s.runs += 1;
        s.optimal += usize::from(r.status == "optimal");
        if let Some(t) = r.wall_time {
            *total += t;
            *timed += 1;
        }
    }
    out.into_iter()
        .map(|(mut s, total, timed)| {
            s.mean_time = (timed > 0).then(|| total / timed as f64);
            s
        })
        .collect()
}

fn summary_line(s: &PresetSummary) -> String {
    format!(
        "{}: {}/{} optimal, mean time {}",
        s.preset,
        s.optimal,
        s.runs,
        s.mean_time
            .map_or_else(|| "-".into(), |t| format!("{t:.3}s"))
    )
}

pub fn write_csv(mut w: impl Write, rows: &[ExperimentRow]) -> anyhow::Result<()> {
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(HEADER)?;
        for r in rows {
            csv.write_record(r.record())?;
        }
        csv.flush()?;
    }
    for s in summarize(rows) {
        writeln!(w, "# {}", summary_line(&s))?;
    }
    Ok(())
}

pub fn render_text(rows: &[ExperimentRow]) -> String {
    let records: Vec<Vec<String>> = std::iter::once(HEADER.map(String::from).to_vec())
        .chain(rows.iter().map(ExperimentRow::record))
        .collect();
    let widths: Vec<usize> = (0..HEADER.len())
        .map(|c| records.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &records {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(x, &w)| format!("{x:<w$}"))
            .collect();
        out += cells.join("  ").trim_end();
        out.push('\n');
    }
    out.push('\n');
    for s in summarize(rows) {
        out += &summary_line(&s);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lines() {
        let text = "# header\nex1.grp m1 --objective weight\n\n/abs/x.smti m4  # trailing\n";
        let rows = parse_manifest(text, Path::new("/data")).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].path, PathBuf::from("/data/ex1.grp"));
        assert_eq!(rows[0].flags.objective, Some(stabmatch::Objective::Weight));
        assert_eq!(rows[0].flags.model.as_deref(), Some("m1"));
        assert_eq!(rows[1].path, PathBuf::from("/abs/x.smti"));
        assert!(parse_manifest("only-path\n", Path::new(".")).is_err());
        assert!(parse_manifest("a m1 --bogus\n", Path::new(".")).is_err());
    }

    #[test]
    fn row_flags_override_defaults() {
        let defaults = SharedFlags {
            time_limit: Some(5.0),
            objective: Some(stabmatch::Objective::Weight),
            ..SharedFlags::default()
        };
        let row = SharedFlags {
            time_limit: Some(1.0),
            ..SharedFlags::default()
        };
        let merged = defaults.overlay(&row).resolve().unwrap();
        assert_eq!(merged.time_limit.as_secs_f64(), 1.0);
        assert_eq!(merged.objective, stabmatch::Objective::Weight);
    }

    #[test]
    fn summary_counts() {
        let row = |preset: &str, status: &str, t: Option<f64>| ExperimentRow {
            instance: "i".into(),
            preset: preset.into(),
            status: status.into(),
            objective: None,
            wall_time: t,
            variables: None,
            constraints: None,
            nonzeros: None,
            removals: None,
            warm_start: None,
            message: String::new(),
        };
        let rows = [
            row("m1", "optimal", Some(1.0)),
            row("m3", "timeout", Some(4.0)),
            row("m1", "optimal", Some(3.0)),
            row("m1", "error", None),
        ];
        let s = summarize(&rows);
        assert_eq!(
            s[0],
            PresetSummary {
                preset: "m1".into(),
                runs: 3,
                optimal: 2,
                mean_time: Some(2.0)
            }
        );
        assert_eq!(s[1].optimal, 0);
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance,preset,status,objective,wall_time,"));
        assert!(text.ends_with("# m3: 0/1 optimal, mean time 4.000s\n"));
    }
}
