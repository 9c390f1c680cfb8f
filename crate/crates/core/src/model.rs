//! Integer linear models of weakly stable matching.
//!
//! A model is built from an [`Instance`] and a [`ModelConfig`]. Variables are
//! named `x_<i>_<j>`, `y_<i>_<k>`, `yp_<j>_<k>` and `z_<j>_<k>` with 1-based
//! agent indices and ranks:
//!
//! * `x_i_j` is 1 when row `i` is matched to column `j`;
//! * `y_i_k` is 1 when row `i` is matched at rank `k` or better;
//! * `yp_j_k` counts the partners of column `j` ranked `k` or better;
//! * `z_j_k` is 1 when hospital `j` is filled with doctors ranked `k - 1`
//!   or better.
//!
//! Without dummy variables, every `y`/`yp` occurrence in a stability
//! constraint is replaced by the matching sum of `x` variables. All models
//! maximise.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::instance::{GrpInstance, Instance};
use crate::matching::Matching;
use crate::stability::{self, Objective};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown model preset `{0}`")]
    UnknownPreset(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("weight objective requires pair weights")]
    MissingWeights,
    #[error("pair ({0}, {1}) has no weight")]
    UnweightedPair(usize, usize),
    #[error("priority scheme `{0}` needs variables that this model does not have")]
    NoPriorityVariables(PriorityScheme),
    #[error("invalid warm start: {0}")]
    InvalidWarmStart(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    /// Non-negative general integer.
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Priority {
    #[default]
    Default,
    Elevated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub priority: Priority,
    pub warm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
            Relation::Ge => lhs >= rhs - tol,
        }
    }
}

/// Linear expression with at most one term per variable, in first-use order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    terms: Vec<(VarId, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merges duplicates and drops zero coefficients.
    pub fn from_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Self {
        let mut out: Vec<(VarId, f64)> = Vec::new();
        let mut at: HashMap<VarId, usize> = HashMap::new();
        for (v, c) in terms {
            match at.get(&v) {
                Some(&k) => out[k].1 += c,
                None => {
                    at.insert(v, out.len());
                    out.push((v, c));
                }
            }
        }
        out.retain(|t| t.1 != 0.0);
        Self { terms: out }
    }

    pub fn terms(&self) -> &[(VarId, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }
}

/// Which constraint family of the formulations a constraint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Each row matched at most once.
    RowCapacity,
    /// Column capacity on `x` sums.
    ColCapacity,
    /// Pairwise stability on `x` sums, scaled by capacity for HRT.
    PairStability,
    /// `y` coherence equalities.
    RowCoherence,
    /// `yp` coherence equalities.
    ColCoherence,
    /// Pairwise stability on dummy variables, scaled by capacity for HRT.
    DummyStability,
    /// One stability constraint per (row, rank).
    MergedStability,
    /// One stability constraint per (column, rank).
    DoubleStability,
    /// `yp_j_last <= c_j`.
    HospitalCapacity,
    /// `x_ij <= 1 - z_{j, rank}`.
    ZFill,
    /// `z_jk >= z_j,k-1`.
    ZMonotone,
    /// `1 - z_jk <= y_{i, rank}` per doctor of rank `k - 1`.
    ZStability,
    /// Merged form of [`Family::ZStability`] per (hospital, rank).
    ZMergedStability,
    /// `c_j z_j,last <= yp_j_last`.
    ZFull,
    /// `c_j z_jk <= yp_j,k-1`.
    ZMix,
}

impl Family {
    pub fn is_stability(self) -> bool {
        !matches!(
            self,
            Family::RowCapacity
                | Family::ColCapacity
                | Family::RowCoherence
                | Family::ColCoherence
                | Family::HospitalCapacity
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub rel: Relation,
    pub rhs: f64,
    /// `None` for constraints read from files.
    pub family: Option<Family>,
}

/// Matching-specific layout of a built model, used by the builtin solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingStructure {
    pub n1: usize,
    pub n2: usize,
    pub capacities: Vec<usize>,
    /// Per row, its `x` variables and columns in preference order.
    pub rows: Vec<Vec<(VarId, usize)>>,
    pub objective: Objective,
}

/// Model size as (variables, constraints, non-zeros).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ModelStats {
    pub variables: usize,
    pub constraints: usize,
    pub nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IlpModel {
    variables: Vec<Variable>,
    index: HashMap<String, VarId>,
    objective: LinExpr,
    constraints: Vec<Constraint>,
    structure: Option<MatchingStructure>,
    includes_stability: bool,
}

impl IlpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let id = self.variables.len();
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
            priority: Priority::Default,
            warm: None,
        });
        Ok(id)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        expr: LinExpr,
        rel: Relation,
        rhs: f64,
        family: Option<Family>,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            expr,
            rel,
            rhs,
            family,
        });
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn structure(&self) -> Option<&MatchingStructure> {
        self.structure.as_ref()
    }

    /// Whether stability constraints were emitted.
    pub fn includes_stability(&self) -> bool {
        self.includes_stability
    }

    pub fn stats(&self) -> ModelStats {
        model_stats(self)
    }

    pub fn count_family(&self, family: Family) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.family == Some(family))
            .count()
    }

    /// Warm values, defaulting missing entries to 0.
    pub fn warm_values(&self) -> Option<Vec<f64>> {
        if self.variables.iter().all(|v| v.warm.is_none()) {
            return None;
        }
        Some(
            self.variables
                .iter()
                .map(|v| v.warm.unwrap_or(0.0))
                .collect(),
        )
    }

    /// First violated bound, integrality or constraint, if any.
    pub fn check_assignment(&self, values: &[f64], tol: f64) -> Result<(), String> {
        if values.len() != self.variables.len() {
            return Err(format!(
                "assignment has {} values for {} variables",
                values.len(),
                self.variables.len()
            ));
        }
        for (v, &x) in self.variables.iter().zip(values) {
            if x < v.lower - tol || x > v.upper + tol {
                return Err(format!(
                    "{} = {} outside [{}, {}]",
                    v.name, x, v.lower, v.upper
                ));
            }
            if (x - x.round()).abs() > tol {
                return Err(format!("{} = {} is not integral", v.name, x));
            }
        }
        for c in &self.constraints {
            let lhs = c.expr.eval(values);
            if !c.rel.holds(lhs, c.rhs, tol) {
                return Err(format!(
                    "constraint {} violated: {} {} {}",
                    c.name,
                    lhs,
                    c.rel.symbol(),
                    c.rhs
                ));
            }
        }
        Ok(())
    }
}

pub fn model_stats(model: &IlpModel) -> ModelStats {
    ModelStats {
        variables: model.variables.len(),
        constraints: model.constraints.len(),
        nonzeros: model.constraints.iter().map(|c| c.expr.terms.len()).sum(),
    }
}

/// Variable classes of the naming scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarClass {
    X,
    Y,
    Yp,
    Z,
}

/// Splits a variable name into its class and two indices, converting the
/// agent index to 0-based. For `x` both indices are agents; for the others
/// the second index is a 1-based rank and is returned unchanged.
pub fn parse_var_name(name: &str) -> Option<(VarClass, usize, usize)> {
    let mut parts = name.split('_');
    let class = match parts.next()? {
        "x" => VarClass::X,
        "y" => VarClass::Y,
        "yp" => VarClass::Yp,
        "z" => VarClass::Z,
        _ => return None,
    };
    let a: usize = parts.next()?.parse().ok()?;
    let b: usize = parts.next()?.parse().ok()?;
    if parts.next().is_some() || a == 0 {
        return None;
    }
    match class {
        VarClass::X if b == 0 => None,
        VarClass::X => Some((class, a - 1, b - 1)),
        _ => Some((class, a - 1, b)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Smti,
    Hrt,
}

/// How the `z` stability constraints are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZForm {
    /// One constraint per doctor.
    Plain,
    /// One constraint per (hospital, rank).
    Merged,
}

/// Stability constraint sets of the HRT models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HrtStability {
    /// Pairwise capacity-scaled constraints.
    pub base: bool,
    /// The `z` variable set.
    pub z: Option<ZForm>,
    /// `c_j z_jk <= yp_j,k-1`, used in place of the pairwise set.
    pub mix: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PriorityScheme {
    #[default]
    None,
    Dummy,
    Z,
}

impl fmt::Display for PriorityScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorityScheme::None => "none",
            PriorityScheme::Dummy => "dummy",
            PriorityScheme::Z => "z",
        })
    }
}

impl std::str::FromStr for PriorityScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(PriorityScheme::None),
            "dummy" => Ok(PriorityScheme::Dummy),
            "z" => Ok(PriorityScheme::Z),
            other => Err(format!(
                "unknown priority scheme `{other}` (expected none, dummy or z)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelConfig {
    pub problem: Problem,
    pub objective: Objective,
    pub dummy_variables: bool,
    pub merge_child_stability: bool,
    pub double_stability: bool,
    pub hrt_stability: HrtStability,
    pub include_stability: bool,
    pub priorities: PriorityScheme,
    /// Number of randomized Gale-Shapley runs for the warm start; 0 is off.
    pub warm_start: usize,
}

impl ModelConfig {
    /// Configuration for a named preset: `m1`..`m6` or `n1`..`n12`.
    pub fn preset(name: &str) -> Result<ModelConfig, ModelError> {
        let lower = name.to_ascii_lowercase();
        let unknown = || ModelError::UnknownPreset(name.to_string());
        let (letter, num) = lower.split_at(1.min(lower.len()));
        let num: usize = num.parse().map_err(|_| unknown())?;
        let base = ModelConfig {
            problem: Problem::Smti,
            objective: Objective::Size,
            dummy_variables: false,
            merge_child_stability: false,
            double_stability: false,
            hrt_stability: HrtStability::default(),
            include_stability: true,
            priorities: PriorityScheme::None,
            warm_start: 0,
        };
        match (letter, num) {
            ("m", 1..=6) => {
                let (dummy, merge, double) = [
                    (false, false, false),
                    (true, false, false),
                    (false, true, false),
                    (true, true, false),
                    (false, true, true),
                    (true, true, true),
                ][num - 1];
                Ok(ModelConfig {
                    dummy_variables: dummy,
                    merge_child_stability: merge,
                    double_stability: double,
                    ..base
                })
            }
            ("n", 1..=12) => {
                let plain = Some(ZForm::Plain);
                let merged = Some(ZForm::Merged);
                let sets = [
                    (true, None, false),
                    (false, plain, false),
                    (false, merged, false),
                    (true, plain, false),
                    (true, merged, false),
                    (false, plain, true),
                ];
                let (b, z, mix) = sets[(num - 1) / 2];
                Ok(ModelConfig {
                    problem: Problem::Hrt,
                    dummy_variables: num.is_multiple_of(2),
                    hrt_stability: HrtStability { base: b, z, mix },
                    ..base
                })
            }
            _ => Err(unknown()),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self.problem {
            Problem::Smti => {
                if self.hrt_stability != HrtStability::default() {
                    return Err(ModelError::Config(
                        "HRT stability sets given for an SMTI model".into(),
                    ));
                }
            }
            Problem::Hrt => {
                if self.objective == Objective::Weight {
                    return Err(ModelError::Config(
                        "weighted objectives are not defined for HRT".into(),
                    ));
                }
                if self.merge_child_stability || self.double_stability {
                    return Err(ModelError::Config(
                        "row merging and double stability apply to SMTI models".into(),
                    ));
                }
                let h = self.hrt_stability;
                if !h.base && h.z.is_none() {
                    return Err(ModelError::Config(
                        "an HRT model needs the pairwise or the z stability set".into(),
                    ));
                }
                if h.mix && h.z.is_none() {
                    return Err(ModelError::Config(
                        "mixed constraints need z variables".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Expression source for "row `i` matched at rank `k` or better" and its
/// column counterpart, either through dummy variables or through `x` sums.
struct Terms<'a> {
    inst: &'a Instance,
    x: &'a HashMap<(usize, usize), VarId>,
    y: Option<&'a [Vec<VarId>]>,
    yp: Option<&'a [Vec<VarId>]>,
}

impl Terms<'_> {
    fn row_at_most(&self, i: usize, k: usize, coef: f64, out: &mut Vec<(VarId, f64)>) {
        if k == 0 {
            return;
        }
        match self.y {
            Some(y) => out.push((y[i][k - 1], coef)),
            None => {
                let list = self.inst.row_prefs(i);
                for r in 1..=k {
                    out.extend(list.group(r).iter().map(|&j| (self.x[&(i, j)], coef)));
                }
            }
        }
    }

    fn col_at_most(&self, j: usize, k: usize, coef: f64, out: &mut Vec<(VarId, f64)>) {
        if k == 0 {
            return;
        }
        match self.yp {
            Some(yp) => out.push((yp[j][k - 1], coef)),
            None => {
                let list = self.inst.col_prefs(j);
                for r in 1..=k {
                    out.extend(list.group(r).iter().map(|&i| (self.x[&(i, j)], coef)));
                }
            }
        }
    }
}

/// Builds the model for `cfg`, dispatching on the problem type.
pub fn build_model(
    inst: &Instance,
    weights: Option<&GrpInstance>,
    cfg: &ModelConfig,
) -> Result<IlpModel, ModelError> {
    match cfg.problem {
        Problem::Smti => build_smti_model(inst, weights, cfg),
        Problem::Hrt => build_hrt_model(inst, cfg),
    }
}

struct Common {
    model: IlpModel,
    x: HashMap<(usize, usize), VarId>,
    y: Option<Vec<Vec<VarId>>>,
    yp: Option<Vec<Vec<VarId>>>,
}

fn declare_common(inst: &Instance, cfg: &ModelConfig) -> Result<Common, ModelError> {
    let mut model = IlpModel::new();
    let mut x = HashMap::with_capacity(inst.num_pairs());
    for (i, j) in inst.pairs() {
        let id = model.add_variable(format!("x_{}_{}", i + 1, j + 1), VarKind::Binary, 0.0, 1.0)?;
        x.insert((i, j), id);
    }
    let (mut y, mut yp) = (None, None);
    if cfg.dummy_variables {
        let mut ys = Vec::with_capacity(inst.n1());
        for i in 0..inst.n1() {
            let ranks = inst.row_prefs(i).num_ranks();
            let mut v = Vec::with_capacity(ranks);
            for k in 1..=ranks {
                v.push(model.add_variable(
                    format!("y_{}_{}", i + 1, k),
                    VarKind::Binary,
                    0.0,
                    1.0,
                )?);
            }
            ys.push(v);
        }
        let mut yps = Vec::with_capacity(inst.n2());
        for j in 0..inst.n2() {
            let list = inst.col_prefs(j);
            let mut v = Vec::with_capacity(list.num_ranks());
            let mut seen = 0usize;
            for k in 1..=list.num_ranks() {
                seen += list.group(k).len();
                let id = match cfg.problem {
                    Problem::Smti => model.add_variable(
                        format!("yp_{}_{}", j + 1, k),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    )?,
                    Problem::Hrt => model.add_variable(
                        format!("yp_{}_{}", j + 1, k),
                        VarKind::Integer,
                        0.0,
                        seen as f64,
                    )?,
                };
                v.push(id);
            }
            yps.push(v);
        }
        y = Some(ys);
        yp = Some(yps);
    }
    Ok(Common { model, x, y, yp })
}

/// Row/column capacity rows without dummies, or coherence rows with them.
fn matching_constraints(inst: &Instance, c: &mut Common) {
    match (&c.y, &c.yp) {
        (Some(y), Some(yp)) => {
            for (i, yi) in y.iter().enumerate() {
                let list = inst.row_prefs(i);
                for k in 1..=list.num_ranks() {
                    let mut t: Vec<_> =
                        list.group(k).iter().map(|&j| (c.x[&(i, j)], 1.0)).collect();
                    if k > 1 {
                        t.push((yi[k - 2], 1.0));
                    }
                    t.push((yi[k - 1], -1.0));
                    c.model.add_constraint(
                        format!("ry_{}_{}", i + 1, k),
                        LinExpr::from_terms(t),
                        Relation::Eq,
                        0.0,
                        Some(Family::RowCoherence),
                    );
                }
            }
            for (j, ypj) in yp.iter().enumerate() {
                let list = inst.col_prefs(j);
                for k in 1..=list.num_ranks() {
                    let mut t: Vec<_> =
                        list.group(k).iter().map(|&i| (c.x[&(i, j)], 1.0)).collect();
                    if k > 1 {
                        t.push((ypj[k - 2], 1.0));
                    }
                    t.push((ypj[k - 1], -1.0));
                    c.model.add_constraint(
                        format!("cy_{}_{}", j + 1, k),
                        LinExpr::from_terms(t),
                        Relation::Eq,
                        0.0,
                        Some(Family::ColCoherence),
                    );
                }
            }
        }
        _ => {
            for i in 0..inst.n1() {
                let list = inst.row_prefs(i);
                if list.is_empty() {
                    continue;
                }
                let t = list.partners().map(|j| (c.x[&(i, j)], 1.0));
                c.model.add_constraint(
                    format!("row_{}", i + 1),
                    LinExpr::from_terms(t),
                    Relation::Le,
                    1.0,
                    Some(Family::RowCapacity),
                );
            }
            for j in 0..inst.n2() {
                let list = inst.col_prefs(j);
                if list.is_empty() {
                    continue;
                }
                let t = list.partners().map(|i| (c.x[&(i, j)], 1.0));
                c.model.add_constraint(
                    format!("col_{}", j + 1),
                    LinExpr::from_terms(t),
                    Relation::Le,
                    inst.capacity(j) as f64,
                    Some(Family::ColCapacity),
                );
            }
        }
    }
}

fn objective(
    inst: &Instance,
    weights: Option<&GrpInstance>,
    cfg: &ModelConfig,
    c: &Common,
) -> Result<LinExpr, ModelError> {
    match cfg.objective {
        Objective::Weight => {
            let w = weights.ok_or(ModelError::MissingWeights)?;
            let mut t = Vec::with_capacity(c.x.len());
            for (i, j) in inst.pairs() {
                let wij = w
                    .weight(i, j)
                    .ok_or(ModelError::UnweightedPair(i + 1, j + 1))?;
                t.push((c.x[&(i, j)], wij));
            }
            Ok(LinExpr::from_terms(t))
        }
        Objective::Size => match &c.y {
            Some(y) => Ok(LinExpr::from_terms(
                y.iter().filter_map(|v| v.last()).map(|&id| (id, 1.0)),
            )),
            None => Ok(LinExpr::from_terms(inst.pairs().map(|p| (c.x[&p], 1.0)))),
        },
    }
}

fn finish(
    inst: &Instance,
    cfg: &ModelConfig,
    mut c: Common,
    obj: LinExpr,
) -> Result<IlpModel, ModelError> {
    c.model.set_objective(obj);
    let rows = (0..inst.n1())
        .map(|i| {
            inst.row_prefs(i)
                .partners()
                .map(|j| (c.x[&(i, j)], j))
                .collect()
        })
        .collect();
    c.model.structure = Some(MatchingStructure {
        n1: inst.n1(),
        n2: inst.n2(),
        capacities: (0..inst.n2()).map(|j| inst.capacity(j)).collect(),
        rows,
        objective: cfg.objective,
    });
    c.model.includes_stability = cfg.include_stability;
    set_priorities(c.model, cfg.priorities)
}

/// Builds M1..M6 style models for a one-to-one instance.
pub fn build_smti_model(
    inst: &Instance,
    weights: Option<&GrpInstance>,
    cfg: &ModelConfig,
) -> Result<IlpModel, ModelError> {
    cfg.validate()?;
    if cfg.problem != Problem::Smti {
        return Err(ModelError::Config("not an SMTI configuration".into()));
    }
    if inst.is_hrt() {
        return Err(ModelError::Config(
            "SMTI models need an instance without capacities".into(),
        ));
    }
    if cfg.objective == Objective::Weight && weights.is_none() {
        return Err(ModelError::MissingWeights);
    }
    let mut c = declare_common(inst, cfg)?;
    matching_constraints(inst, &mut c);

    if cfg.include_stability {
        let terms = Terms {
            inst,
            x: &c.x,
            y: c.y.as_deref(),
            yp: c.yp.as_deref(),
        };
        let mut out = Vec::new();
        if cfg.merge_child_stability {
            for i in 0..inst.n1() {
                let list = inst.row_prefs(i);
                for k in 1..=list.num_ranks() {
                    let group = list.group(k);
                    let size = group.len() as f64;
                    let mut t = Vec::new();
                    terms.row_at_most(i, k, size, &mut t);
                    for &j in group {
                        terms.col_at_most(j, inst.col_rank(j, i).unwrap(), 1.0, &mut t);
                    }
                    out.push((
                        format!("ms_{}_{}", i + 1, k),
                        t,
                        size,
                        Family::MergedStability,
                    ));
                }
            }
        } else {
            let family = if cfg.dummy_variables {
                Family::DummyStability
            } else {
                Family::PairStability
            };
            for (i, j) in inst.pairs() {
                let mut t = Vec::new();
                terms.row_at_most(i, inst.row_rank(i, j).unwrap(), 1.0, &mut t);
                terms.col_at_most(j, inst.col_rank(j, i).unwrap(), 1.0, &mut t);
                out.push((format!("st_{}_{}", i + 1, j + 1), t, 1.0, family));
            }
        }
        if cfg.double_stability {
            for j in 0..inst.n2() {
                let list = inst.col_prefs(j);
                for k in 1..=list.num_ranks() {
                    let group = list.group(k);
                    let size = group.len() as f64;
                    let mut t = Vec::new();
                    terms.col_at_most(j, k, size, &mut t);
                    for &i in group {
                        terms.row_at_most(i, inst.row_rank(i, j).unwrap(), 1.0, &mut t);
                    }
                    out.push((
                        format!("ds_{}_{}", j + 1, k),
                        t,
                        size,
                        Family::DoubleStability,
                    ));
                }
            }
        }
        for (name, t, rhs, family) in out {
            c.model.add_constraint(
                name,
                LinExpr::from_terms(t),
                Relation::Ge,
                rhs,
                Some(family),
            );
        }
    }

    let obj = objective(inst, weights, cfg, &c)?;
    finish(inst, cfg, c, obj)
}

/// Builds N1..N12 style models for an instance with capacities.
pub fn build_hrt_model(inst: &Instance, cfg: &ModelConfig) -> Result<IlpModel, ModelError> {
    cfg.validate()?;
    if cfg.problem != Problem::Hrt {
        return Err(ModelError::Config("not an HRT configuration".into()));
    }
    if !inst.is_hrt() {
        return Err(ModelError::Config(
            "HRT models need hospital capacities".into(),
        ));
    }
    let mut c = declare_common(inst, cfg)?;
    matching_constraints(inst, &mut c);
    if let Some(yp) = &c.yp {
        for (j, ypj) in yp.iter().enumerate() {
            if let Some(&last) = ypj.last() {
                c.model.add_constraint(
                    format!("cap_{}", j + 1),
                    LinExpr::from_terms([(last, 1.0)]),
                    Relation::Le,
                    inst.capacity(j) as f64,
                    Some(Family::HospitalCapacity),
                );
            }
        }
    }

    if cfg.include_stability {
        let h = cfg.hrt_stability;
        let mut z: Vec<Vec<VarId>> = vec![Vec::new(); inst.n2()];
        if h.z.is_some() {
            for (j, zj) in z.iter_mut().enumerate() {
                let ranks = inst.col_prefs(j).num_ranks();
                if ranks == 0 {
                    continue;
                }
                for k in 1..=ranks + 1 {
                    zj.push(c.model.add_variable(
                        format!("z_{}_{}", j + 1, k),
                        VarKind::Binary,
                        0.0,
                        1.0,
                    )?);
                }
            }
        }
        let terms = Terms {
            inst,
            x: &c.x,
            y: c.y.as_deref(),
            yp: c.yp.as_deref(),
        };
        let mut out = Vec::new();
        if h.base {
            let family = if cfg.dummy_variables {
                Family::DummyStability
            } else {
                Family::PairStability
            };
            for (i, j) in inst.pairs() {
                let cap = inst.capacity(j) as f64;
                let mut t = Vec::new();
                terms.row_at_most(i, inst.row_rank(i, j).unwrap(), cap, &mut t);
                terms.col_at_most(j, inst.col_rank(j, i).unwrap(), 1.0, &mut t);
                out.push((
                    format!("st_{}_{}", i + 1, j + 1),
                    t,
                    Relation::Ge,
                    cap,
                    family,
                ));
            }
        }
        if let Some(form) = h.z {
            for (i, j) in inst.pairs() {
                let t = vec![
                    (c.x[&(i, j)], 1.0),
                    (z[j][inst.col_rank(j, i).unwrap() - 1], 1.0),
                ];
                out.push((
                    format!("zf_{}_{}", i + 1, j + 1),
                    t,
                    Relation::Le,
                    1.0,
                    Family::ZFill,
                ));
            }
            for (j, zj) in z.iter().enumerate() {
                let list = inst.col_prefs(j);
                let ranks = list.num_ranks();
                if ranks == 0 {
                    continue;
                }
                let cap = inst.capacity(j) as f64;
                for k in 2..=ranks + 1 {
                    let t = vec![(zj[k - 1], 1.0), (zj[k - 2], -1.0)];
                    out.push((
                        format!("zm_{}_{}", j + 1, k),
                        t,
                        Relation::Ge,
                        0.0,
                        Family::ZMonotone,
                    ));
                }
                for k in 2..=ranks + 1 {
                    let group = list.group(k - 1);
                    match form {
                        ZForm::Plain => {
                            for &i in group {
                                let mut t = vec![(zj[k - 1], 1.0)];
                                terms.row_at_most(i, inst.row_rank(i, j).unwrap(), 1.0, &mut t);
                                out.push((
                                    format!("zs_{}_{}_{}", j + 1, k, i + 1),
                                    t,
                                    Relation::Ge,
                                    1.0,
                                    Family::ZStability,
                                ));
                            }
                        }
                        ZForm::Merged => {
                            let size = group.len() as f64;
                            let mut t = vec![(zj[k - 1], size)];
                            for &i in group {
                                terms.row_at_most(i, inst.row_rank(i, j).unwrap(), 1.0, &mut t);
                            }
                            out.push((
                                format!("zms_{}_{}", j + 1, k),
                                t,
                                Relation::Ge,
                                size,
                                Family::ZMergedStability,
                            ));
                        }
                    }
                }
                let mut t = vec![(zj[ranks], cap)];
                terms.col_at_most(j, ranks, -1.0, &mut t);
                out.push((format!("zu_{}", j + 1), t, Relation::Le, 0.0, Family::ZFull));
                if h.mix {
                    for k in 2..=ranks + 1 {
                        let mut t = vec![(zj[k - 1], cap)];
                        terms.col_at_most(j, k - 1, -1.0, &mut t);
                        out.push((
                            format!("zx_{}_{}", j + 1, k),
                            t,
                            Relation::Le,
                            0.0,
                            Family::ZMix,
                        ));
                    }
                }
            }
        }
        for (name, t, rel, rhs, family) in out {
            c.model
                .add_constraint(name, LinExpr::from_terms(t), rel, rhs, Some(family));
        }
    }

    let obj = objective(inst, None, cfg, &c)?;
    finish(inst, cfg, c, obj)
}

/// Marks the dummy (`y`, `yp`) or `z` variables as elevated; all others
/// return to the default level.
pub fn set_priorities(mut model: IlpModel, scheme: PriorityScheme) -> Result<IlpModel, ModelError> {
    let wanted = |name: &str| match parse_var_name(name) {
        Some((VarClass::Y | VarClass::Yp, ..)) => scheme == PriorityScheme::Dummy,
        Some((VarClass::Z, ..)) => scheme == PriorityScheme::Z,
        _ => false,
    };
    let mut any = false;
    for v in &mut model.variables {
        v.priority = if wanted(&v.name) {
            any = true;
            Priority::Elevated
        } else {
            Priority::Default
        };
    }
    if scheme != PriorityScheme::None && !any {
        return Err(ModelError::NoPriorityVariables(scheme));
    }
    Ok(model)
}

/// Sets warm values for every variable from a matching.
///
/// The matching must be valid, and stable when the model carries stability
/// constraints; the resulting values are checked against the model.
pub fn attach_warm_start(
    mut model: IlpModel,
    inst: &Instance,
    m: &Matching,
) -> Result<IlpModel, ModelError> {
    let validity = stability::check_matching(inst, m);
    if !validity.is_valid() {
        return Err(ModelError::InvalidWarmStart("matching is not valid".into()));
    }
    if model.includes_stability && !stability::is_stable(inst, m) {
        return Err(ModelError::InvalidWarmStart(
            "matching is not stable".into(),
        ));
    }
    let (row_of, members) = m.assignment(inst.n1(), inst.n2());
    let col_count_at_most = |j: usize, k: usize| {
        members[j]
            .iter()
            .filter(|&&i| inst.col_rank(j, i).is_some_and(|r| r <= k))
            .count()
    };
    for v in &mut model.variables {
        let value = match parse_var_name(&v.name) {
            Some((VarClass::X, i, j)) => f64::from(m.contains(i, j)),
            Some((VarClass::Y, i, k)) => {
                let hit = i < inst.n1()
                    && row_of[i].is_some_and(|j| inst.row_rank(i, j).is_some_and(|r| r <= k));
                f64::from(hit)
            }
            Some((VarClass::Yp, j, k)) if j < inst.n2() => col_count_at_most(j, k) as f64,
            Some((VarClass::Z, j, k)) if j < inst.n2() => {
                f64::from(col_count_at_most(j, k - 1) == inst.capacity(j))
            }
            _ => return Err(ModelError::UnknownVariable(v.name.clone())),
        };
        v.warm = Some(value);
    }
    let values = model.warm_values().unwrap_or_default();
    model
        .check_assignment(&values, 1e-9)
        .map_err(ModelError::InvalidWarmStart)?;
    Ok(model)
}
