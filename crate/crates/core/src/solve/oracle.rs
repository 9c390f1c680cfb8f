//! Exhaustive enumeration of matchings for small instances.

use crate::instance::{GrpInstance, Instance};
use crate::matching::Matching;
use crate::stability::{self, Objective};

use super::SolveError;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub best_matching: Matching,
    pub best_value: f64,
    /// Number of leaves that passed the filter (stable matchings when
    /// stability is required, all matchings otherwise).
    pub count_stable: u64,
}

/// Best stable matching by exhaustive search. Ties go to the
/// lexicographically smallest pair set.
pub fn solve_exact_oracle(
    inst: &Instance,
    objective: Objective,
    weights: Option<&GrpInstance>,
    limit: u64,
) -> Result<OracleResult, SolveError> {
    solve_oracle(inst, objective, weights, limit, true)
}

/// As [`solve_exact_oracle`], optionally over all matchings.
pub fn solve_oracle(
    inst: &Instance,
    objective: Objective,
    weights: Option<&GrpInstance>,
    limit: u64,
    require_stability: bool,
) -> Result<OracleResult, SolveError> {
    if objective == Objective::Weight && weights.is_none() {
        return Err(stability::StabilityError::MissingWeights.into());
    }
    let mut best: Option<(f64, Matching)> = None;
    let mut count = 0u64;
    let mut err = None;
    walk(inst, limit, require_stability, &mut |m| {
        count += 1;
        let value = match stability::matching_value(m, objective, weights) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                return;
            }
        };
        let better = match &best {
            None => true,
            Some((bv, bm)) => value > *bv || (value == *bv && m < bm),
        };
        if better {
            best = Some((value, m.clone()));
        }
    })?;
    if let Some(e) = err {
        return Err(e.into());
    }
    // the empty matching is a leaf, so without stability `best` is always set;
    // with stability at least one stable matching always exists
    let (best_value, best_matching) = best.expect("a stable matching exists");
    Ok(OracleResult {
        best_matching,
        best_value,
        count_stable: count,
    })
}

/// Every stable matching, in lexicographic order.
pub fn enumerate_stable_matchings(
    inst: &Instance,
    limit: u64,
) -> Result<Vec<Matching>, SolveError> {
    let mut all = Vec::new();
    walk(inst, limit, true, &mut |m| all.push(m.clone()))?;
    all.sort();
    Ok(all)
}

struct Walker<'a, F> {
    inst: &'a Instance,
    limit: u64,
    nodes: u64,
    stable_only: bool,
    load: Vec<usize>,
    current: Matching,
    visit: &'a mut F,
}

fn walk<F: FnMut(&Matching)>(
    inst: &Instance,
    limit: u64,
    stable_only: bool,
    visit: &mut F,
) -> Result<(), SolveError> {
    let mut w = Walker {
        inst,
        limit,
        nodes: 0,
        stable_only,
        load: vec![0; inst.n2()],
        current: Matching::new(),
        visit,
    };
    w.row(0)
}

impl<F: FnMut(&Matching)> Walker<'_, F> {
    fn row(&mut self, i: usize) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(SolveError::BudgetExhausted(self.limit));
        }
        if i == self.inst.n1() {
            if !self.stable_only || stability::is_stable(self.inst, &self.current) {
                (self.visit)(&self.current);
            }
            return Ok(());
        }
        let partners: Vec<usize> = self.inst.row_prefs(i).partners().collect();
        for j in partners {
            if self.load[j] < self.inst.capacity(j) {
                self.load[j] += 1;
                self.current.insert(i, j);
                let r = self.row(i + 1);
                self.current.remove(i, j);
                self.load[j] -= 1;
                r?;
            }
        }
        self.row(i + 1)
    }
}
