//! Matching validity, weak-stability blocking pairs, and matching values.

use thiserror::Error;

use crate::instance::{GrpInstance, Instance};
use crate::matching::Matching;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("invalid matching: {0}")]
    InvalidMatching(String),
    #[error("weight objective requested but no weights are available")]
    MissingWeights,
    #[error("pair ({0}, {1}) has no weight")]
    UnweightedPair(usize, usize),
}

/// What to maximise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Objective {
    Size,
    Weight,
}

impl std::str::FromStr for Objective {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "size" => Ok(Objective::Size),
            "weight" => Ok(Objective::Weight),
            other => Err(format!(
                "unknown objective `{other}` (expected size or weight)"
            )),
        }
    }
}

/// Structural violations of a matching.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidityReport {
    /// Pairs that are out of range or not acceptable.
    pub unacceptable: Vec<(usize, usize)>,
    /// Rows appearing in more than one pair.
    pub rows_matched_twice: Vec<usize>,
    /// Columns holding more partners than their capacity.
    pub over_capacity: Vec<usize>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.unacceptable.is_empty()
            && self.rows_matched_twice.is_empty()
            && self.over_capacity.is_empty()
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(&(i, j)) = self.unacceptable.first() {
            parts.push(format!("unacceptable pair ({}, {})", i + 1, j + 1));
        }
        if let Some(&i) = self.rows_matched_twice.first() {
            parts.push(format!("row {} matched more than once", i + 1));
        }
        if let Some(&j) = self.over_capacity.first() {
            parts.push(format!("column {} over capacity", j + 1));
        }
        parts.join("; ")
    }
}

pub fn check_matching(inst: &Instance, m: &Matching) -> ValidityReport {
    let mut report = ValidityReport::default();
    let mut row_count = vec![0usize; inst.n1()];
    let mut col_count = vec![0usize; inst.n2()];
    for (i, j) in m.pairs() {
        if !inst.is_acceptable(i, j) {
            report.unacceptable.push((i, j));
            continue;
        }
        row_count[i] += 1;
        col_count[j] += 1;
    }
    report.rows_matched_twice = (0..inst.n1()).filter(|&i| row_count[i] > 1).collect();
    report.over_capacity = (0..inst.n2())
        .filter(|&j| col_count[j] > inst.capacity(j))
        .collect();
    report
}

/// Blocking pairs of a matching under weak stability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockingReport {
    pub pairs: Vec<(usize, usize)>,
    pub stable: bool,
}

/// Enumerates every acceptable pair outside `m` that blocks it.
///
/// A column prefers a row to its current members when the row is ranked
/// strictly better than the worst member.
pub fn blocking_pairs(inst: &Instance, m: &Matching) -> Result<BlockingReport, StabilityError> {
    let validity = check_matching(inst, m);
    if !validity.is_valid() {
        return Err(StabilityError::InvalidMatching(validity.describe()));
    }
    let (row_of, members) = m.assignment(inst.n1(), inst.n2());
    let worst: Vec<Option<usize>> = members
        .iter()
        .enumerate()
        .map(|(j, ms)| ms.iter().filter_map(|&i| inst.col_rank(j, i)).max())
        .collect();
    let mut pairs = Vec::new();
    for (i, j) in inst.pairs() {
        if row_of[i] == Some(j) {
            continue;
        }
        let rank_ij = inst.row_rank(i, j).expect("acceptable");
        let row_wants = match row_of[i] {
            None => true,
            Some(cur) => rank_ij < inst.row_rank(i, cur).expect("valid"),
        };
        if !row_wants {
            continue;
        }
        let col_wants = members[j].len() < inst.capacity(j)
            || worst[j].is_some_and(|w| inst.col_rank(j, i).expect("acceptable") < w);
        if col_wants {
            pairs.push((i, j));
        }
    }
    let stable = pairs.is_empty();
    Ok(BlockingReport { pairs, stable })
}

/// `true` when `m` is valid and admits no blocking pair.
pub fn is_stable(inst: &Instance, m: &Matching) -> bool {
    blocking_pairs(inst, m).is_ok_and(|r| r.stable)
}

/// Size or total weight of a matching.
pub fn matching_value(
    m: &Matching,
    objective: Objective,
    weights: Option<&GrpInstance>,
) -> Result<f64, StabilityError> {
    match objective {
        Objective::Size => Ok(m.len() as f64),
        Objective::Weight => {
            let w = weights.ok_or(StabilityError::MissingWeights)?;
            m.pairs()
                .map(|(i, j)| {
                    w.weight(i, j)
                        .ok_or(StabilityError::UnweightedPair(i + 1, j + 1))
                })
                .sum()
        }
    }
}
