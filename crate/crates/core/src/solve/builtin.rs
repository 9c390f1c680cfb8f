//! Depth-first branch-and-bound with bound propagation.
//!
//! Constraints are normalised to `sum a x <= b` rows over integers. Each row
//! keeps its minimum activity under the current bounds; tightening a bound
//! updates the affected rows and queues them for propagation. Branching
//! decides rows of `x` variables (one per row agent), fewest open options
//! first, then any remaining variable.
//!
//! For models with matching structure the size bound is a maximum
//! b-matching over the still-open pairs, maintained incrementally, and the
//! weight bound is the sum of the best open weight per row.
//!
//! When the model is small enough an LP relaxation is solved at the root and
//! carried down the tree, re-solved from the parent basis after each branch.
//! Its optimum tightens the bound and picks the branching variable. Integer
//! objectives are searched against descending targets starting from the
//! floored root bound, with node-limited restarts that rotate the branching
//! rule.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{parse_var_name, IlpModel, Priority, Relation, VarClass, VarKind};
use crate::stability::Objective;

use super::{SolveError, SolveStatus};

const NONE: u32 = u32::MAX;
const EPS: f64 = 1e-6;
const TARGET_LEVELS: usize = 3;
const RULES: usize = 3;
const RESTART_NODES: u64 = 64;
const LP_TOL: f64 = 1e-6;
const LP_MAX_DIM: usize = 40_000;
const LP_MAX_NNZ: usize = 400_000;

/// The search recurses once per branching decision, which outgrows the
/// default stack of worker threads on large models.
const STACK_BYTES: usize = 512 << 20;

pub(super) fn solve(
    model: &IlpModel,
    deadline: Instant,
) -> Result<(SolveStatus, Option<Vec<f64>>), SolveError> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("builtin-search".into())
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || search(model, deadline))?
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

fn search(
    model: &IlpModel,
    deadline: Instant,
) -> Result<(SolveStatus, Option<Vec<f64>>), SolveError> {
    let mut search = Search::new(model, deadline)?;
    if Instant::now() >= deadline {
        let best = search.best.take().map(|(_, v)| v);
        return Ok((SolveStatus::Timeout, best));
    }
    let root_ok = search.lb.iter().zip(&search.ub).all(|(l, u)| l <= u) && {
        for r in 0..search.rows.len() {
            search.enqueue(r as u32);
        }
        search.propagate()
    };
    if root_ok {
        search.build_lp();
        if let Ok(root) = search.root_lp() {
            search.run(root);
        }
    }
    let status = if search.timed_out {
        SolveStatus::Timeout
    } else if search.best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    Ok((status, search.best.map(|(_, v)| v)))
}

/// The Luby restart sequence 1, 1, 2, 1, 1, 2, 4, ...
fn luby(i: u64) -> u64 {
    let mut i = i;
    loop {
        let mut k = 1;
        while (1u64 << k) - 1 < i {
            k += 1;
        }
        if (1u64 << k) - 1 == i {
            return 1 << (k - 1);
        }
        i -= (1u64 << (k - 1)) - 1;
    }
}

struct Row {
    terms: Vec<(u32, i64)>,
    rhs: i64,
}

/// Incrementally maintained maximum b-matching over open `x` variables.
struct MatchBound {
    /// Per row agent: `(var, col)` options in preference order.
    options: Vec<Vec<(u32, u32)>>,
    capacity: Vec<u32>,
    /// Index into `options[r]` of the matched option, or `NONE`.
    matched: Vec<u32>,
    load: Vec<u32>,
    members: Vec<Vec<u32>>,
    size: usize,
    seen: Vec<u32>,
    stamp: u32,
}

impl MatchBound {
    fn rebuild_from(&mut self, matched: &[u32]) {
        self.matched.copy_from_slice(matched);
        for m in &mut self.members {
            m.clear();
        }
        self.load.iter_mut().for_each(|l| *l = 0);
        self.size = 0;
        for (r, &k) in self.matched.iter().enumerate() {
            if k != NONE {
                let c = self.options[r][k as usize].1 as usize;
                self.members[c].push(r as u32);
                self.load[c] += 1;
                self.size += 1;
            }
        }
    }

    /// Drops matched pairs that are no longer open and re-maximises.
    /// Returns whether the matching changed.
    fn update(&mut self, ub: &[i64]) -> bool {
        let mut dropped = false;
        for r in 0..self.matched.len() {
            let k = self.matched[r];
            if k == NONE {
                continue;
            }
            let (v, c) = self.options[r][k as usize];
            if ub[v as usize] <= 0 {
                self.matched[r] = NONE;
                let c = c as usize;
                self.load[c] -= 1;
                self.members[c].retain(|&x| x != r as u32);
                self.size -= 1;
                dropped = true;
            }
        }
        if dropped {
            self.maximise(ub);
        }
        dropped
    }

    fn maximise(&mut self, ub: &[i64]) {
        loop {
            self.stamp = self.stamp.wrapping_add(1);
            if self.stamp == 0 {
                self.seen.iter_mut().for_each(|s| *s = 0);
                self.stamp = 1;
            }
            let mut grew = false;
            for r in 0..self.matched.len() {
                if self.matched[r] == NONE && self.augment(r, ub) {
                    self.size += 1;
                    grew = true;
                }
            }
            if !grew {
                return;
            }
        }
    }

    fn augment(&mut self, r: usize, ub: &[i64]) -> bool {
        for k in 0..self.options[r].len() {
            let (v, c) = self.options[r][k];
            let c = c as usize;
            if ub[v as usize] <= 0 || self.seen[c] == self.stamp {
                continue;
            }
            self.seen[c] = self.stamp;
            if self.load[c] < self.capacity[c] {
                self.load[c] += 1;
                self.members[c].push(r as u32);
                self.matched[r] = k as u32;
                return true;
            }
            for idx in 0..self.members[c].len() {
                let other = self.members[c][idx] as usize;
                if self.augment(other, ub) {
                    self.members[c][idx] = r as u32;
                    self.matched[r] = k as u32;
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Clone, Copy)]
enum Fix {
    Lb(u32, i64),
    Ub(u32, i64),
}

/// LP relaxation over the root-propagated bounds.
struct Relaxation {
    problem: Problem,
    vars: Vec<Variable>,
}

enum Bound {
    Generic,
    Size(Box<MatchBound>),
    /// Per row: `(var, weight)`.
    Weight(Vec<Vec<(u32, f64)>>),
}

struct Search {
    lb: Vec<i64>,
    ub: Vec<i64>,
    rows: Vec<Row>,
    var_rows: Vec<Vec<(u32, i64)>>,
    min_act: Vec<i64>,
    trail: Vec<(u32, i64, i64)>,
    queue: Vec<u32>,
    queued: Vec<bool>,
    objective: Vec<f64>,
    integral_objective: bool,
    elevated: Vec<u32>,
    /// `x` variables per row agent in preference order.
    x_rows: Vec<Vec<u32>>,
    others: Vec<u32>,
    bound: Bound,
    lp: Option<Relaxation>,
    /// Nodes whose bound falls below this are cut off.
    target: f64,
    best: Option<(f64, Vec<f64>)>,
    deadline: Instant,
    nodes: u64,
    timed_out: bool,
    /// Node count at which the current restart gives up.
    budget: u64,
    aborted: bool,
    rule: usize,
    rng: ChaCha8Rng,
}

fn integral(x: f64) -> Option<i64> {
    (x.is_finite() && (x - x.round()).abs() <= 1e-9).then(|| x.round() as i64)
}

impl Search {
    fn new(model: &IlpModel, deadline: Instant) -> Result<Search, SolveError> {
        let n = model.variables().len();
        let mut lb = Vec::with_capacity(n);
        let mut ub = Vec::with_capacity(n);
        for v in model.variables() {
            let (l, u) = match v.kind {
                VarKind::Binary => (v.lower.max(0.0), v.upper.min(1.0)),
                VarKind::Integer => (v.lower, v.upper),
            };
            if !l.is_finite() || !u.is_finite() {
                return Err(SolveError::UnboundedVariable(v.name.clone()));
            }
            lb.push((l - 1e-9).ceil() as i64);
            ub.push((u + 1e-9).floor() as i64);
        }

        let mut rows = Vec::new();
        for c in model.constraints() {
            let mut terms = Vec::with_capacity(c.expr.terms().len());
            for &(v, a) in c.expr.terms() {
                let a = integral(a)
                    .ok_or_else(|| SolveError::NonIntegralCoefficient(c.name.clone()))?;
                terms.push((v as u32, a));
            }
            let negated = || terms.iter().map(|&(v, a)| (v, -a)).collect::<Vec<_>>();
            if matches!(c.rel, Relation::Le | Relation::Eq) {
                rows.push(Row {
                    terms: terms.clone(),
                    rhs: (c.rhs + 1e-9).floor() as i64,
                });
            }
            if matches!(c.rel, Relation::Ge | Relation::Eq) {
                rows.push(Row {
                    terms: negated(),
                    rhs: (-c.rhs + 1e-9).floor() as i64,
                });
            }
        }
        let mut var_rows = vec![Vec::new(); n];
        for (r, row) in rows.iter().enumerate() {
            for &(v, a) in &row.terms {
                var_rows[v as usize].push((r as u32, a));
            }
        }
        let min_act = rows
            .iter()
            .map(|row| {
                row.terms
                    .iter()
                    .map(|&(v, a)| {
                        if a > 0 {
                            a * lb[v as usize]
                        } else {
                            a * ub[v as usize]
                        }
                    })
                    .sum()
            })
            .collect();

        let mut objective = vec![0.0; n];
        for &(v, c) in model.objective().terms() {
            objective[v] += c;
        }
        let integral_objective = objective.iter().all(|&c| integral(c).is_some());

        let elevated: Vec<u32> = model
            .variables()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.priority == Priority::Elevated && v.kind == VarKind::Binary)
            .map(|(k, _)| k as u32)
            .collect();

        let mut is_x = vec![false; n];
        let (x_rows, bound) = match model.structure() {
            Some(s) => {
                let x_rows: Vec<Vec<u32>> = s
                    .rows
                    .iter()
                    .map(|opts| opts.iter().map(|&(v, _)| v as u32).collect())
                    .collect();
                let bound = match s.objective {
                    Objective::Size => {
                        let options: Vec<Vec<(u32, u32)>> = s
                            .rows
                            .iter()
                            .map(|opts| opts.iter().map(|&(v, c)| (v as u32, c as u32)).collect())
                            .collect();
                        let mut mb = MatchBound {
                            matched: vec![NONE; options.len()],
                            options,
                            capacity: s.capacities.iter().map(|&c| c as u32).collect(),
                            load: vec![0; s.n2],
                            members: vec![Vec::new(); s.n2],
                            size: 0,
                            seen: vec![0; s.n2],
                            stamp: 0,
                        };
                        mb.maximise(&ub);
                        Bound::Size(Box::new(mb))
                    }
                    Objective::Weight => Bound::Weight(
                        x_rows
                            .iter()
                            .map(|r| r.iter().map(|&v| (v, objective[v as usize])).collect())
                            .collect(),
                    ),
                };
                (x_rows, bound)
            }
            None => {
                let mut named: Vec<(usize, usize, u32)> = model
                    .variables()
                    .iter()
                    .enumerate()
                    .filter_map(|(k, v)| match parse_var_name(&v.name) {
                        Some((VarClass::X, i, j)) if v.kind == VarKind::Binary => {
                            Some((i, j, k as u32))
                        }
                        _ => None,
                    })
                    .collect();
                named.sort_unstable();
                let mut x_rows: Vec<Vec<u32>> = Vec::new();
                let mut last = None;
                for (i, _, v) in named {
                    if last != Some(i) {
                        x_rows.push(Vec::new());
                        last = Some(i);
                    }
                    x_rows.last_mut().unwrap().push(v);
                }
                (x_rows, Bound::Generic)
            }
        };
        for r in &x_rows {
            for &v in r {
                is_x[v as usize] = true;
            }
        }
        let others = (0..n as u32).filter(|&v| !is_x[v as usize]).collect();

        let mut search = Search {
            lb,
            ub,
            queued: vec![false; rows.len()],
            rows,
            var_rows,
            min_act,
            trail: Vec::new(),
            queue: Vec::new(),
            objective,
            integral_objective,
            elevated,
            x_rows,
            others,
            bound,
            lp: None,
            target: f64::NEG_INFINITY,
            best: None,
            deadline,
            nodes: 0,
            timed_out: false,
            budget: u64::MAX,
            aborted: false,
            rule: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
        };
        if let Some(warm) = model.warm_values() {
            if model.check_assignment(&warm, 1e-9).is_ok() {
                let value = model.objective().eval(&warm);
                search.best = Some((value, warm.iter().map(|x| x.round()).collect()));
            }
        }
        Ok(search)
    }

    fn enqueue(&mut self, r: u32) {
        if !self.queued[r as usize] {
            self.queued[r as usize] = true;
            self.queue.push(r);
        }
    }

    fn set_ub(&mut self, v: u32, new: i64) -> bool {
        let vi = v as usize;
        if new >= self.ub[vi] {
            return true;
        }
        if new < self.lb[vi] {
            return false;
        }
        self.trail.push((v, self.lb[vi], self.ub[vi]));
        let delta = new - self.ub[vi];
        for k in 0..self.var_rows[vi].len() {
            let (r, a) = self.var_rows[vi][k];
            if a < 0 {
                self.min_act[r as usize] += a * delta;
            }
            self.enqueue(r);
        }
        self.ub[vi] = new;
        true
    }

    fn set_lb(&mut self, v: u32, new: i64) -> bool {
        let vi = v as usize;
        if new <= self.lb[vi] {
            return true;
        }
        if new > self.ub[vi] {
            return false;
        }
        self.trail.push((v, self.lb[vi], self.ub[vi]));
        let delta = new - self.lb[vi];
        for k in 0..self.var_rows[vi].len() {
            let (r, a) = self.var_rows[vi][k];
            if a > 0 {
                self.min_act[r as usize] += a * delta;
            }
            self.enqueue(r);
        }
        self.lb[vi] = new;
        true
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let (v, old_lb, old_ub) = self.trail.pop().unwrap();
            let vi = v as usize;
            let (dl, du) = (old_lb - self.lb[vi], old_ub - self.ub[vi]);
            for &(r, a) in &self.var_rows[vi] {
                if a > 0 {
                    self.min_act[r as usize] += a * dl;
                } else {
                    self.min_act[r as usize] += a * du;
                }
            }
            self.lb[vi] = old_lb;
            self.ub[vi] = old_ub;
        }
    }

    fn clear_queue(&mut self) {
        for r in self.queue.drain(..) {
            self.queued[r as usize] = false;
        }
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while let Some(r) = self.queue.pop() {
            let ri = r as usize;
            self.queued[ri] = false;
            let slack = self.rows[ri].rhs - self.min_act[ri];
            if slack < 0 {
                self.clear_queue();
                return false;
            }
            for k in 0..self.rows[ri].terms.len() {
                let (v, a) = self.rows[ri].terms[k];
                let vi = v as usize;
                let range = self.ub[vi] - self.lb[vi];
                if range == 0 {
                    continue;
                }
                // the row's slack may have shrunk through earlier terms
                let slack = self.rows[ri].rhs - self.min_act[ri];
                let ok = if a > 0 {
                    range * a <= slack || self.set_ub(v, self.lb[vi] + slack / a)
                } else {
                    range * -a <= slack || self.set_lb(v, self.ub[vi] - slack / -a)
                };
                if !ok {
                    self.clear_queue();
                    return false;
                }
            }
        }
        true
    }

    fn upper_bound(&mut self) -> f64 {
        let generic: f64 = self
            .objective
            .iter()
            .enumerate()
            .map(|(v, &c)| {
                if c > 0.0 {
                    c * self.ub[v] as f64
                } else {
                    c * self.lb[v] as f64
                }
            })
            .sum();
        let structured = match &mut self.bound {
            Bound::Generic => f64::INFINITY,
            Bound::Size(mb) => {
                mb.update(&self.ub);
                mb.size as f64
            }
            Bound::Weight(rows) => rows
                .iter()
                .map(|opts| {
                    let mut best = 0.0f64;
                    for &(v, w) in opts {
                        let vi = v as usize;
                        if self.lb[vi] >= 1 {
                            return w;
                        }
                        if self.ub[vi] >= 1 {
                            best = best.max(w);
                        }
                    }
                    best
                })
                .sum(),
        };
        generic.min(structured)
    }

    /// Searches for solutions reaching successive integer targets below the
    /// root bound, which keeps dives close to the relaxation optimum. Each
    /// target is attempted with node-limited restarts that rotate the
    /// branching rule, doubling the limit every full rotation.
    fn run(&mut self, root: Option<Solution>) {
        let Some(sol) = root else {
            return self.dfs(None);
        };
        let mut targets = Vec::new();
        if self.integral_objective {
            let top = (self.upper_bound().min(sol.objective()) + EPS).floor();
            targets.extend((0..TARGET_LEVELS).map(|k| top - k as f64));
        }
        targets.push(f64::NEG_INFINITY);
        for target in targets {
            self.target = target;
            for attempt in 0u32.. {
                if self.best.as_ref().is_some_and(|(b, _)| *b >= target - EPS) {
                    return;
                }
                self.rule = attempt as usize % RULES;
                self.rng = ChaCha8Rng::seed_from_u64(attempt as u64);
                self.budget = self
                    .nodes
                    .saturating_add(RESTART_NODES * luby(attempt as u64 / RULES as u64 + 1));
                self.aborted = false;
                self.dfs(Some(sol.clone()));
                if self.timed_out {
                    return;
                }
                if !self.aborted {
                    break;
                }
            }
        }
    }

    fn stopped(&self) -> bool {
        self.timed_out || self.aborted
    }

    fn prune(&self, bound: f64) -> bool {
        if bound < self.target - EPS {
            return true;
        }
        let Some((best, _)) = &self.best else {
            return false;
        };
        if self.integral_objective {
            bound < best + 1.0 - EPS
        } else {
            bound <= best + EPS
        }
    }

    fn out_of_time(&mut self, every_node: bool) -> bool {
        if self.stopped() {
            return true;
        }
        self.nodes += 1;
        if (every_node || self.nodes.is_multiple_of(1024)) && Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        if self.nodes >= self.budget {
            self.aborted = true;
        }
        self.stopped()
    }

    /// Applies `fixes`, propagates and explores the child, then restores
    /// state.
    fn branch(&mut self, fixes: &[Fix], lp: Option<&Solution>) {
        let mark = self.trail.len();
        let saved = match &self.bound {
            Bound::Size(mb) => Some(mb.matched.clone()),
            _ => None,
        };
        let ok = fixes.iter().all(|f| match *f {
            Fix::Lb(v, x) => self.set_lb(v, x),
            Fix::Ub(v, x) => self.set_ub(v, x),
        });
        if ok && self.propagate() {
            match lp.filter(|_| self.lp.is_some()) {
                None => self.dfs(None),
                Some(parent) => {
                    if let Some(child) = self.lp_child(parent) {
                        self.dfs(Some(child));
                    }
                }
            }
        } else {
            self.clear_queue();
        }
        self.undo(mark);
        if let (Some(saved), Bound::Size(mb)) = (saved, &mut self.bound) {
            if mb.matched != saved {
                mb.rebuild_from(&saved);
            }
        }
    }

    /// Re-solves the parent relaxation until its optimum respects the current
    /// bounds. `None` means the node is infeasible or time ran out.
    fn lp_child(&mut self, parent: &Solution) -> Option<Solution> {
        let mut sol = parent.clone();
        loop {
            if Instant::now() >= self.deadline {
                self.timed_out = true;
                return None;
            }
            let lp = self.lp.as_ref().expect("relaxation present");
            let off = (0..self.lb.len()).find(|&v| {
                let x = sol[lp.vars[v]];
                x < self.lb[v] as f64 - LP_TOL || x > self.ub[v] as f64 + LP_TOL
            });
            let Some(v) = off else {
                return Some(sol);
            };
            let var = lp.vars[v];
            let (lo, hi) = (self.lb[v] as f64, self.ub[v] as f64);
            let x = sol[var];
            let step = catch_unwind(AssertUnwindSafe(move || {
                if lo == hi {
                    sol.fix_var(var, lo)
                } else if x < lo {
                    sol.add_constraint([(var, 1.0)], ComparisonOp::Ge, lo)
                } else {
                    sol.add_constraint([(var, 1.0)], ComparisonOp::Le, hi)
                }
            }));
            match step {
                Ok(Ok(next)) => sol = next,
                Ok(Err(_)) => return None,
                Err(_) => {
                    // numerical trouble: carry on without the relaxation
                    self.lp = None;
                    self.dfs(None);
                    return None;
                }
            }
        }
    }

    /// `Err` when the relaxation is infeasible.
    fn root_lp(&mut self) -> Result<Option<Solution>, ()> {
        let Some(lp) = &self.lp else {
            return Ok(None);
        };
        match catch_unwind(AssertUnwindSafe(|| lp.problem.solve())) {
            Ok(Ok(sol)) => Ok(Some(sol)),
            Ok(Err(minilp::Error::Infeasible)) => Err(()),
            _ => {
                self.lp = None;
                Ok(None)
            }
        }
    }

    fn build_lp(&mut self) {
        let nnz: usize = self.rows.iter().map(|r| r.terms.len()).sum();
        if self.lb.len() + self.rows.len() > LP_MAX_DIM || nnz > LP_MAX_NNZ {
            return;
        }
        let mut problem = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<Variable> = (0..self.lb.len())
            .map(|v| problem.add_var(self.objective[v], (self.lb[v] as f64, self.ub[v] as f64)))
            .collect();
        for r in &self.rows {
            if r.terms.is_empty() {
                continue;
            }
            let expr: Vec<(Variable, f64)> = r
                .terms
                .iter()
                .map(|&(v, a)| (vars[v as usize], a as f64))
                .collect();
            problem.add_constraint(expr.as_slice(), ComparisonOp::Le, r.rhs as f64);
        }
        self.lp = Some(Relaxation { problem, vars });
    }

    fn record(&mut self, values: Vec<f64>) {
        let value: f64 = self.objective.iter().zip(&values).map(|(c, x)| c * x).sum();
        if self.best.as_ref().is_none_or(|(b, _)| value > *b + EPS) {
            self.best = Some((value, values));
        }
    }

    fn satisfies_rows(&self, values: &[i64]) -> bool {
        values
            .iter()
            .enumerate()
            .all(|(v, &x)| self.lb[v] <= x && x <= self.ub[v])
            && self.rows.iter().all(|r| {
                r.terms
                    .iter()
                    .map(|&(v, a)| a * values[v as usize])
                    .sum::<i64>()
                    <= r.rhs
            })
    }

    /// Branches on a fractional variable of the relaxation. Returns false when
    /// the relaxation gives no guidance.
    fn lp_branch(&mut self, sol: &Solution) -> bool {
        let lp = self.lp.as_ref().expect("relaxation present");
        let value = |v: u32| sol[lp.vars[v as usize]];
        let fractional = |v: &u32| {
            let x = value(*v);
            (x - x.round()).abs() > LP_TOL
        };
        let mut pick = self.elevated.iter().copied().find(fractional);
        if pick.is_none() && self.rule == 2 {
            let open: Vec<u32> = self
                .x_rows
                .iter()
                .flatten()
                .copied()
                .filter(fractional)
                .collect();
            pick = open.choose(&mut self.rng).copied();
        }
        let pick = pick
            .or_else(|| {
                self.x_rows
                    .iter()
                    .flatten()
                    .copied()
                    .filter(fractional)
                    .min_by(|&a, &b| {
                        let key = |v: u32| match self.rule {
                            1 => -value(v),
                            _ => (value(v) - 0.5).abs(),
                        };
                        key(a).total_cmp(&key(b))
                    })
            })
            .or_else(|| self.others.iter().copied().find(fractional));
        let Some(v) = pick else {
            let values: Vec<i64> = (0..self.lb.len())
                .map(|v| value(v as u32).round() as i64)
                .collect();
            if !self.satisfies_rows(&values) {
                return false;
            }
            self.record(values.into_iter().map(|x| x as f64).collect());
            return true;
        };
        let x = value(v);
        let up = [Fix::Lb(v, x.ceil() as i64)];
        let down = [Fix::Ub(v, x.floor() as i64)];
        let up_first = match self.rule {
            0 => false,
            1 => true,
            _ => self.rng.gen_bool(0.5),
        };
        let (first, second) = if self.elevated.contains(&v) || up_first {
            (up, down)
        } else {
            (down, up)
        };
        self.branch(&first, Some(sol));
        if !self.stopped() {
            self.branch(&second, Some(sol));
        }
        true
    }

    fn dfs(&mut self, lp: Option<Solution>) {
        if self.out_of_time(lp.is_some()) {
            return;
        }
        let mut bound = self.upper_bound();
        if let Some(sol) = &lp {
            bound = bound.min(sol.objective());
        }
        if self.prune(bound) {
            return;
        }
        if let Some(sol) = &lp {
            if self.lp_branch(sol) {
                return;
            }
        }
        let lp = lp.as_ref();

        if let Some(&v) = self
            .elevated
            .iter()
            .find(|&&v| self.lb[v as usize] < self.ub[v as usize])
        {
            self.branch(&[Fix::Lb(v, 1)], lp);
            self.branch(&[Fix::Ub(v, 0)], lp);
            return;
        }

        let mut pick: Option<(usize, usize)> = None;
        for (r, vars) in self.x_rows.iter().enumerate() {
            let mut open = 0;
            let mut decided = false;
            for &v in vars {
                let vi = v as usize;
                if self.lb[vi] >= 1 {
                    decided = true;
                    break;
                }
                if self.ub[vi] >= 1 {
                    open += 1;
                }
            }
            if !decided && open > 0 && pick.is_none_or(|(_, best)| open < best) {
                pick = Some((r, open));
                if open == 1 {
                    break;
                }
            }
        }
        if let Some((r, _)) = pick {
            let open: Vec<u32> = self.x_rows[r]
                .iter()
                .copied()
                .filter(|&v| self.ub[v as usize] >= 1)
                .collect();
            for &v in &open {
                self.branch(&[Fix::Lb(v, 1)], lp);
                if self.stopped() {
                    return;
                }
            }
            let none: Vec<Fix> = open.iter().map(|&v| Fix::Ub(v, 0)).collect();
            self.branch(&none, lp);
            return;
        }

        let unfixed = |v: &&u32| self.lb[**v as usize] < self.ub[**v as usize];
        let rest = self.others.iter().find(unfixed);
        let rest = rest.or_else(|| self.x_rows.iter().flatten().find(unfixed));
        if let Some(&v) = rest {
            let (lo, hi) = (self.lb[v as usize], self.ub[v as usize]);
            for val in (lo..=hi).rev() {
                self.branch(&[Fix::Lb(v, val), Fix::Ub(v, val)], lp);
                if self.stopped() {
                    return;
                }
            }
            return;
        }

        // every variable is fixed and propagation found no conflict
        let values = self.lb.iter().map(|&x| x as f64).collect();
        self.record(values);
    }
}
