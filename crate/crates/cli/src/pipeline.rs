//! One solve: load, optionally reduce, warm start, build, solve, extract,
//! verify. Every failure names the stage it came from.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use stabmatch::format::{self, ParsedInstance};
use stabmatch::heuristics::best_of_k;
use stabmatch::model::{attach_warm_start, build_model, IlpModel, ModelConfig, ModelStats};
use stabmatch::preprocess::{reduce_fixpoint, RemovalSet};
use stabmatch::solve::{extract_matching, solve_until};
use stabmatch::stability::{blocking_pairs, matching_value};
use stabmatch::{GrpInstance, Instance, Matching, SolveStatus};

use crate::flags::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Preprocess,
    WarmStart,
    Build,
    Solve,
    Extract,
    Verify,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Preprocess => "preprocess",
            Stage::WarmStart => "warm-start",
            Stage::Build => "build",
            Stage::Solve => "solve",
            Stage::Extract => "extract",
            Stage::Verify => "verify",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

fn at<E: fmt::Display>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        message: e.to_string(),
    }
}

/// An instance ready for modelling. `weights` is present for weighted input
/// and already has the threshold applied.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInstance {
    pub inst: Instance,
    pub weights: Option<GrpInstance>,
}

pub fn parse_loaded(text: &str, threshold: f64) -> Result<LoadedInstance, PipelineError> {
    match format::parse_instance(text).map_err(at(Stage::Load))? {
        ParsedInstance::Lists(inst) => {
            if threshold != 0.0 {
                return Err(at(Stage::Load)(
                    "a threshold needs a weighted (GRP) instance",
                ));
            }
            Ok(LoadedInstance {
                inst,
                weights: None,
            })
        }
        ParsedInstance::Grp(g) => {
            let g = g.apply_threshold(threshold);
            Ok(LoadedInstance {
                inst: g.derive_preferences(),
                weights: Some(g),
            })
        }
    }
}

pub fn read_instance(path: &Path, threshold: f64) -> Result<LoadedInstance, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| at(Stage::Load)(format!("{}: {e}", path.display())))?;
    parse_loaded(&text, threshold)
}

/// The reduced instance and what was removed, or the instance unchanged.
pub fn reduce(inst: &Instance, enabled: bool) -> Result<(Instance, RemovalSet), PipelineError> {
    if enabled {
        reduce_fixpoint(inst).map_err(at(Stage::Preprocess))
    } else {
        Ok((inst.clone(), RemovalSet::default()))
    }
}

/// Builds the model for `opts` and attaches the warm start, returning the
/// warm start's value alongside.
pub fn build(
    inst: &Instance,
    weights: Option<&GrpInstance>,
    opts: &SolveOptions,
) -> Result<(IlpModel, Option<f64>), PipelineError> {
    let mut cfg = ModelConfig::preset(&opts.preset).map_err(at(Stage::Build))?;
    cfg.objective = opts.objective;
    cfg.include_stability = opts.stability;
    cfg.priorities = opts.priorities;
    cfg.warm_start = opts.warm_start;
    let model = build_model(inst, weights, &cfg).map_err(at(Stage::Build))?;
    if opts.warm_start == 0 {
        return Ok((model, None));
    }
    let m = best_of_k(inst, opts.objective, weights, opts.warm_start, opts.seed)
        .map_err(at(Stage::WarmStart))?;
    let value = matching_value(&m, opts.objective, weights).map_err(at(Stage::WarmStart))?;
    let model = attach_warm_start(model, inst, &m).map_err(at(Stage::WarmStart))?;
    Ok((model, Some(value)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub status: SolveStatus,
    /// Value of the extracted matching, never the solver's own figure.
    pub objective: Option<f64>,
    pub matching: Option<Matching>,
    /// Seconds from the start of preprocessing to the verified result.
    pub wall_time: f64,
    pub stats: ModelStats,
    pub removals: usize,
    pub warm_start: Option<f64>,
}

pub fn run(loaded: &LoadedInstance, opts: &SolveOptions) -> Result<Report, PipelineError> {
    let start = Instant::now();
    let deadline = start + opts.time_limit;
    let weights = loaded.weights.as_ref();
    let (inst, removed) = reduce(&loaded.inst, opts.preprocess)?;
    let (model, warm_start) = build(&inst, weights, opts)?;
    let result = solve_until(&model, &opts.backend, deadline).map_err(at(Stage::Solve))?;

    let mut objective = None;
    let mut matching = None;
    if !result.assignment.is_empty() {
        let m = extract_matching(&inst, &result).map_err(at(Stage::Extract))?;
        let value = matching_value(&m, opts.objective, weights).map_err(at(Stage::Verify))?;
        if let Some(reported) = result.objective {
            if (reported - value).abs() > 1e-6 * value.abs().max(1.0) {
                return Err(at(Stage::Verify)(format!(
                    "solver objective {reported} differs from the matching's value {value}"
                )));
            }
        }
        if opts.stability {
            let report = blocking_pairs(&loaded.inst, &m).map_err(at(Stage::Verify))?;
            if let Some(&(i, j)) = report.pairs.first() {
                return Err(at(Stage::Verify)(format!(
                    "{} blocking pairs in the input instance, first ({}, {})",
                    report.pairs.len(),
                    i + 1,
                    j + 1
                )));
            }
        }
        objective = Some(value);
        matching = Some(m);
    }
    Ok(Report {
        status: result.status,
        objective,
        matching,
        wall_time: start.elapsed().as_secs_f64(),
        stats: result.stats,
        removals: removed.len(),
        warm_start,
    })
}

/// Process exit code for a finished solve.
pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Timeout => 2,
        SolveStatus::Infeasible => 3,
        SolveStatus::Feasible => 5,
    }
}

pub fn render_text(report: &Report) -> String {
    let mut out = format!("status: {}\n", report.status);
    if let Some(v) = report.objective {
        out += &format!("objective: {v}\n");
    }
    if let Some(m) = &report.matching {
        out += &format!("size: {}\n", m.len());
    }
    let s = report.stats;
    out += &format!(
        "model: {} variables, {} constraints, {} nonzeros\n",
        s.variables, s.constraints, s.nonzeros
    );
    out += &format!("removed pairs: {}\n", report.removals);
    if let Some(w) = report.warm_start {
        out += &format!("warm start: {w}\n");
    }
    out += &format!("time: {:.3}s\n", report.wall_time);
    if let Some(m) = &report.matching {
        out += "matching:\n";
        out += &format::write_matching(m);
    }
    out
}
