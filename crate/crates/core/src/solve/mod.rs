//! Solving built models: a builtin branch-and-bound, an external-solver
//! bridge over LP files, and an exhaustive oracle for small instances.

mod bridge;
mod builtin;
mod lp;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::instance::Instance;
use crate::matching::Matching;
use crate::model::{parse_var_name, IlpModel, ModelStats, VarClass};
use crate::stability;

pub use bridge::{parse_solution, write_solution, SolutionFile};
pub use lp::{export_lp, read_lp, LpError};
pub use oracle::{enumerate_stable_matchings, solve_exact_oracle, solve_oracle, OracleResult};

/// Tolerance on integrality and constraint satisfaction of parsed solutions.
pub const INTEGRALITY_TOL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("constraint `{0}` has a non-integral coefficient")]
    NonIntegralCoefficient(String),
    #[error("variable `{0}` needs finite integral bounds")]
    UnboundedVariable(String),
    #[error("external solver: {0}")]
    Bridge(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solution integrity: {0}")]
    Integrity(String),
    #[error("oracle node budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error(transparent)]
    Stability(#[from] stability::StabilityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Timeout,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Timeout => "timeout",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "feasible" => Ok(SolveStatus::Feasible),
            "infeasible" => Ok(SolveStatus::Infeasible),
            "timeout" => Ok(SolveStatus::Timeout),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Backend {
    Builtin,
    /// Command run as `<cmd> <lp-path> <sol-path> <time-limit-seconds>`.
    External(PathBuf),
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "builtin" {
            Ok(Backend::Builtin)
        } else if let Some(cmd) = s.strip_prefix("cmd:") {
            if cmd.is_empty() {
                Err("empty command in `cmd:`".into())
            } else {
                Ok(Backend::External(PathBuf::from(cmd)))
            }
        } else {
            Err(format!(
                "unknown backend `{s}` (expected builtin or cmd:PATH)"
            ))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective of the assignment, when there is one.
    pub objective: Option<f64>,
    /// Empty when no solution was found.
    pub assignment: BTreeMap<String, f64>,
    pub wall_time: f64,
    pub stats: ModelStats,
    pub includes_stability: bool,
}

/// Solves `model` within `time_limit` of wall-clock time.
pub fn solve(
    model: &IlpModel,
    backend: &Backend,
    time_limit: Duration,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    solve_until(model, backend, start + time_limit)
}

/// Solves `model`, giving up at `deadline`.
pub fn solve_until(
    model: &IlpModel,
    backend: &Backend,
    deadline: Instant,
) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let (status, values) = match backend {
        Backend::Builtin => builtin::solve(model, deadline)?,
        Backend::External(cmd) => bridge::solve(model, cmd, deadline)?,
    };
    let wall_time = start.elapsed().as_secs_f64();
    let mut objective = None;
    let mut assignment = BTreeMap::new();
    if let Some(values) = values {
        model
            .check_assignment(&values, INTEGRALITY_TOL)
            .map_err(SolveError::Integrity)?;
        objective = Some(model.objective().eval(&values));
        assignment = model
            .variables()
            .iter()
            .zip(&values)
            .map(|(v, &x)| (v.name.clone(), x))
            .collect();
    }
    Ok(SolveResult {
        status,
        objective,
        assignment,
        wall_time,
        stats: model.stats(),
        includes_stability: model.includes_stability(),
    })
}

/// Pairs whose `x` variable exceeds 0.5, checked for validity and, when the
/// model carried stability constraints, for stability.
pub fn extract_matching(inst: &Instance, result: &SolveResult) -> Result<Matching, SolveError> {
    let mut m = Matching::new();
    for (name, &value) in &result.assignment {
        if let Some((VarClass::X, i, j)) = parse_var_name(name) {
            if value > 0.5 {
                m.insert(i, j);
            }
        }
    }
    let validity = stability::check_matching(inst, &m);
    if !validity.is_valid() {
        return Err(SolveError::Integrity(format!(
            "extracted matching is invalid: {validity:?}"
        )));
    }
    if result.includes_stability {
        let report = stability::blocking_pairs(inst, &m)?;
        if !report.stable {
            return Err(SolveError::Integrity(format!(
                "extracted matching has blocking pairs {:?}",
                report.pairs
            )));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::GrpInstance;
    use crate::model::{build_model, LinExpr, ModelConfig, Relation, VarKind};
    use crate::stability::Objective;

    fn example1() -> (GrpInstance, Instance) {
        let w = [[95.0, 85.0, 80.0], [95.0, 80.0, 80.0], [80.0, 45.0, 75.0]];
        let pairs = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j, w[i][j])))
            .collect();
        let g = GrpInstance::new(3, 3, pairs).unwrap();
        let inst = g.derive_preferences();
        (g, inst)
    }

    fn example2() -> (GrpInstance, Instance) {
        let pairs = vec![
            (0, 0, 1.0),
            (1, 0, 4.0),
            (1, 1, 4.0),
            (2, 1, 3.0),
            (2, 2, 4.0),
            (3, 2, 4.0),
            (3, 3, 1.0),
        ];
        let g = GrpInstance::new(4, 4, pairs).unwrap();
        let inst = g.derive_preferences();
        (g, inst)
    }

    const LIMIT: Duration = Duration::from_secs(30);

    #[test]
    fn example1_m1_weight() {
        let (g, inst) = example1();
        let cfg = ModelConfig {
            objective: Objective::Weight,
            ..ModelConfig::preset("m1").unwrap()
        };
        let model = build_model(&inst, Some(&g), &cfg).unwrap();
        let r = solve(&model, &Backend::Builtin, LIMIT).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(255.0));
        let m = extract_matching(&inst, &r).unwrap();
        assert_eq!(m, Matching::from_pairs([(0, 1), (1, 0), (2, 2)]));
    }

    #[test]
    fn example2_without_stability_is_maximum_matching() {
        let (_, inst) = example2();
        let cfg = ModelConfig {
            include_stability: false,
            ..ModelConfig::preset("m1").unwrap()
        };
        let model = build_model(&inst, None, &cfg).unwrap();
        let r = solve(&model, &Backend::Builtin, LIMIT).unwrap();
        assert_eq!(r.objective, Some(4.0));
    }

    #[test]
    fn infeasible_model() {
        let mut model = IlpModel::new();
        let x = model
            .add_variable("x_1_1", VarKind::Binary, 0.0, 1.0)
            .unwrap();
        model.add_constraint(
            "a",
            LinExpr::from_terms([(x, 1.0)]),
            Relation::Ge,
            1.0,
            None,
        );
        model.add_constraint(
            "b",
            LinExpr::from_terms([(x, 1.0)]),
            Relation::Le,
            0.0,
            None,
        );
        model.set_objective(LinExpr::from_terms([(x, 1.0)]));
        let r = solve(&model, &Backend::Builtin, LIMIT).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.objective.is_none());
    }

    #[test]
    fn zero_time_limit_times_out() {
        let (_, inst) = example2();
        let model = build_model(&inst, None, &ModelConfig::preset("m1").unwrap()).unwrap();
        let r = solve(&model, &Backend::Builtin, Duration::ZERO).unwrap();
        assert_eq!(r.status, SolveStatus::Timeout);
    }

    fn result_with(assignment: &[(&str, f64)], stable: bool) -> SolveResult {
        SolveResult {
            status: SolveStatus::Optimal,
            objective: Some(0.0),
            assignment: assignment
                .iter()
                .map(|&(n, v)| (n.to_string(), v))
                .collect(),
            wall_time: 0.0,
            stats: ModelStats::default(),
            includes_stability: stable,
        }
    }

    #[test]
    fn extraction() {
        let (_, inst) = example1();
        let zero = result_with(&[("x_1_1", 0.0), ("x_1_2", 0.0)], false);
        assert!(extract_matching(&inst, &zero).unwrap().is_empty());
        let twice = result_with(&[("x_1_1", 1.0), ("x_1_2", 1.0)], false);
        assert!(matches!(
            extract_matching(&inst, &twice),
            Err(SolveError::Integrity(_))
        ));
        let unstable = result_with(&[("x_3_2", 1.0)], true);
        assert!(matches!(
            extract_matching(&inst, &unstable),
            Err(SolveError::Integrity(_))
        ));
    }

    #[test]
    fn backend_parse() {
        assert_eq!("builtin".parse::<Backend>().unwrap(), Backend::Builtin);
        assert_eq!(
            "cmd:/bin/solver".parse::<Backend>().unwrap(),
            Backend::External(PathBuf::from("/bin/solver"))
        );
        assert!("cmd:".parse::<Backend>().is_err());
        assert!("cplex".parse::<Backend>().is_err());
    }
}
