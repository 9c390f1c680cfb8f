//! Removal of acceptable pairs that cannot belong to any stable matching.
//!
//! Both reductions rest on the same fact: if a row `i` and a set `F` of
//! columns acceptable to `i` are such that `|F| >= |C|`, where `C` collects
//! every row that some column of `F` ranks at least as well as `i`, then `i`
//! is matched at a rank no worse than the worst column of `F` in every
//! stable matching. Pairs ranked below that can be dropped.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::instance::{Instance, InstanceError};

/// The reduction that justified a removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reduction {
    FirstRankFamily,
    FirstRankChild,
    FullChildPreferences,
    FullFamilyPreferences,
}

impl Reduction {
    /// Order in which one fixpoint round applies the reductions.
    pub const ROUND: [Reduction; 4] = [
        Reduction::FirstRankFamily,
        Reduction::FirstRankChild,
        Reduction::FullChildPreferences,
        Reduction::FullFamilyPreferences,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Reduction::FirstRankFamily => "first-rank-family",
            Reduction::FirstRankChild => "first-rank-child",
            Reduction::FullChildPreferences => "full-child-preferences",
            Reduction::FullFamilyPreferences => "full-family-preferences",
        }
    }

    /// Runs this reduction alone on `inst`.
    pub fn apply(self, inst: &Instance) -> Result<RemovalSet, InstanceError> {
        if inst.is_hrt() {
            return Err(InstanceError::Unsupported(
                "preprocessing of instances with capacities",
            ));
        }
        let pairs = match self {
            Reduction::FirstRankFamily => first_rank_pairs(inst),
            Reduction::FullChildPreferences => full_preference_pairs(inst),
            Reduction::FirstRankChild => swap(first_rank_pairs(&inst.transpose()?)),
            Reduction::FullFamilyPreferences => swap(full_preference_pairs(&inst.transpose()?)),
        };
        Ok(RemovalSet {
            entries: pairs
                .into_iter()
                .map(|(row, col)| Removal {
                    row,
                    col,
                    reduction: self,
                })
                .collect(),
        })
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Removal {
    pub row: usize,
    pub col: usize,
    pub reduction: Reduction,
}

/// Pairs to delete, each tagged with the reduction that found it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RemovalSet {
    entries: Vec<Removal>,
}

impl RemovalSet {
    pub fn entries(&self) -> &[Removal] {
        &self.entries
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|r| (r.row, r.col)).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Log lines `row col reduction`, 1-based.
    pub fn to_log(&self) -> String {
        self.entries
            .iter()
            .map(|r| format!("{} {} {}\n", r.row + 1, r.col + 1, r.reduction))
            .collect()
    }
}

fn swap(pairs: BTreeSet<(usize, usize)>) -> BTreeSet<(usize, usize)> {
    pairs.into_iter().map(|(a, b)| (b, a)).collect()
}

/// Pairs of `row` ranked strictly worse than `rank`.
fn worse_than(inst: &Instance, row: usize, rank: usize, out: &mut BTreeSet<(usize, usize)>) {
    let list = inst.row_prefs(row);
    for k in rank + 1..=list.num_ranks() {
        out.extend(list.group(k).iter().map(|&j| (row, j)));
    }
}

/// Groups columns by their exact set of equally best rows; a group of at
/// least as many columns as rows pins each of those rows to the group.
fn first_rank_pairs(inst: &Instance) -> BTreeSet<(usize, usize)> {
    let mut by_best: HashMap<&[usize], Vec<usize>> = HashMap::new();
    for j in 0..inst.n2() {
        let list = inst.col_prefs(j);
        if !list.is_empty() {
            by_best.entry(list.group(1)).or_default().push(j);
        }
    }
    let mut out = BTreeSet::new();
    for (rows, cols) in by_best {
        if cols.len() < rows.len() {
            continue;
        }
        for &i in rows {
            let worst = cols
                .iter()
                .map(|&j| inst.row_rank(i, j).expect("consistent lists"))
                .max()
                .expect("non-empty column group");
            worse_than(inst, i, worst, &mut out);
        }
    }
    out
}

/// Grows the column set down each row's list until it covers its rows.
fn full_preference_pairs(inst: &Instance) -> BTreeSet<(usize, usize)> {
    let mut stamp = vec![usize::MAX; inst.n1()];
    let mut out = BTreeSet::new();
    for i in 0..inst.n1() {
        let mut covered = 0usize;
        for (added, (j, rank)) in inst.row_prefs(i).iter_ranked().enumerate() {
            let limit = inst.col_rank(j, i).expect("consistent lists");
            let col = inst.col_prefs(j);
            for k in 1..=limit {
                for &p in col.group(k) {
                    if stamp[p] != i {
                        stamp[p] = i;
                        covered += 1;
                    }
                }
            }
            if added + 1 >= covered {
                worse_than(inst, i, rank, &mut out);
                break;
            }
        }
    }
    out
}

pub fn first_rank_family(inst: &Instance) -> Result<RemovalSet, InstanceError> {
    Reduction::FirstRankFamily.apply(inst)
}

pub fn first_rank_child(inst: &Instance) -> Result<RemovalSet, InstanceError> {
    Reduction::FirstRankChild.apply(inst)
}

pub fn full_child_preferences(inst: &Instance) -> Result<RemovalSet, InstanceError> {
    Reduction::FullChildPreferences.apply(inst)
}

pub fn full_family_preferences(inst: &Instance) -> Result<RemovalSet, InstanceError> {
    Reduction::FullFamilyPreferences.apply(inst)
}

/// Applies all four reductions in [`Reduction::ROUND`] order, deleting as it
/// goes, until a whole round removes nothing.
pub fn reduce_fixpoint(inst: &Instance) -> Result<(Instance, RemovalSet), InstanceError> {
    let mut current = inst.clone();
    let mut log = RemovalSet::default();
    loop {
        let mut removed_in_round = 0;
        for reduction in Reduction::ROUND {
            let found = reduction.apply(&current)?;
            if !found.is_empty() {
                removed_in_round += found.len();
                current = current.without_pairs(&found.pairs());
                log.entries.extend(found.entries);
            }
        }
        if removed_in_round == 0 {
            return Ok((current, log));
        }
    }
}
