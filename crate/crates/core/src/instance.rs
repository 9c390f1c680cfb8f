//! Instances of SMTI, HRT and SMTI-GRP.
//!
//! Agents are indexed from 0 in memory. Ranks are 1-based: the partners in
//! the first tie group of a list have rank 1. Text formats and ILP variable
//! names use 1-based agent indices.

use std::collections::HashMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: index {index} out of range 1..={bound}")]
    IndexOutOfRange {
        line: usize,
        column: usize,
        index: usize,
        bound: usize,
    },
    #[error("{agent}: partner {partner} listed more than once")]
    DuplicatePartner { agent: String, partner: usize },
    #[error("{agent}: empty tie group")]
    EmptyGroup { agent: String },
    #[error("inconsistent lists: {0}")]
    Inconsistent(String),
    #[error("hospital {hospital} has non-positive capacity")]
    NonPositiveCapacity { hospital: usize },
    #[error("expected {expected} capacities, found {found}")]
    CapacityCount { expected: usize, found: usize },
    #[error("pair ({row}, {col}) appears more than once")]
    DuplicatePair { row: usize, col: usize },
    #[error("pair ({row}, {col}) out of range for a {n1}x{n2} instance")]
    PairOutOfRange {
        row: usize,
        col: usize,
        n1: usize,
        n2: usize,
    },
    #[error("pair ({row}, {col}) has a non-finite weight")]
    NonFiniteWeight { row: usize, col: usize },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}

/// Which side of the bipartition an agent lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Children / doctors.
    Row,
    /// Families / hospitals.
    Col,
}

/// A preference list as an ordered sequence of tie groups.
///
/// Members of a group are kept sorted by index so that equal lists compare
/// equal and iteration within a tie follows increasing index order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PreferenceList {
    groups: Vec<Vec<usize>>,
}

impl PreferenceList {
    /// Builds a list from tie groups, rejecting empty groups and repeated partners.
    pub fn new(groups: Vec<Vec<usize>>) -> Result<Self, InstanceError> {
        Self::with_owner(groups, "agent")
    }

    fn with_owner(mut groups: Vec<Vec<usize>>, owner: &str) -> Result<Self, InstanceError> {
        let mut seen = std::collections::HashSet::new();
        for g in &mut groups {
            if g.is_empty() {
                return Err(InstanceError::EmptyGroup {
                    agent: owner.to_string(),
                });
            }
            for &p in g.iter() {
                if !seen.insert(p) {
                    return Err(InstanceError::DuplicatePartner {
                        agent: owner.to_string(),
                        partner: p + 1,
                    });
                }
            }
            g.sort_unstable();
        }
        Ok(Self { groups })
    }

    /// A list without ties, most preferred first.
    pub fn strict(order: impl IntoIterator<Item = usize>) -> Result<Self, InstanceError> {
        Self::new(order.into_iter().map(|p| vec![p]).collect())
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Members of the tie group at `rank` (1-based).
    pub fn group(&self, rank: usize) -> &[usize] {
        &self.groups[rank - 1]
    }

    /// Number of tie groups (distinct ranks).
    pub fn num_ranks(&self) -> usize {
        self.groups.len()
    }

    /// Number of listed partners.
    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn is_strict(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    /// Partners with their ranks, best first; ties in increasing index order.
    pub fn iter_ranked(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.groups
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.iter().map(move |&p| (p, k + 1)))
    }

    pub fn partners(&self) -> impl Iterator<Item = usize> + '_ {
        self.groups.iter().flatten().copied()
    }

    pub fn rank_of(&self, partner: usize) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| g.contains(&partner))
            .map(|k| k + 1)
    }

    /// Drops every partner for which `remove` holds; emptied groups vanish.
    pub(crate) fn retain(&mut self, mut keep: impl FnMut(usize) -> bool) {
        for g in &mut self.groups {
            g.retain(|&p| keep(p));
        }
        self.groups.retain(|g| !g.is_empty());
    }
}

/// Sorted `(partner, rank)` lookup for one agent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
struct RankIndex(Vec<(usize, usize)>);

impl RankIndex {
    fn build(list: &PreferenceList) -> Self {
        let mut v: Vec<_> = list.iter_ranked().collect();
        v.sort_unstable();
        Self(v)
    }

    fn get(&self, partner: usize) -> Option<usize> {
        self.0
            .binary_search_by_key(&partner, |&(p, _)| p)
            .ok()
            .map(|pos| self.0[pos].1)
    }
}

/// A consistent bipartite instance with ties and incomplete lists.
///
/// With `capacities` present the instance is an HRT instance (rows are
/// doctors, columns are hospitals); otherwise it is SMTI.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    rows: Vec<PreferenceList>,
    cols: Vec<PreferenceList>,
    capacities: Option<Vec<usize>>,
    row_index: Vec<RankIndex>,
    col_index: Vec<RankIndex>,
}

impl Instance {
    pub fn new(
        rows: Vec<PreferenceList>,
        cols: Vec<PreferenceList>,
        capacities: Option<Vec<usize>>,
    ) -> Result<Self, InstanceError> {
        let (n1, n2) = (rows.len(), cols.len());
        if let Some(caps) = &capacities {
            if caps.len() != n2 {
                return Err(InstanceError::CapacityCount {
                    expected: n2,
                    found: caps.len(),
                });
            }
            if let Some(h) = caps.iter().position(|&c| c == 0) {
                return Err(InstanceError::NonPositiveCapacity { hospital: h + 1 });
            }
        }
        for (i, l) in rows.iter().enumerate() {
            if let Some(j) = l.partners().find(|&j| j >= n2) {
                return Err(InstanceError::Inconsistent(format!(
                    "row {} lists column {} but there are only {} columns",
                    i + 1,
                    j + 1,
                    n2
                )));
            }
        }
        for (j, l) in cols.iter().enumerate() {
            if let Some(i) = l.partners().find(|&i| i >= n1) {
                return Err(InstanceError::Inconsistent(format!(
                    "column {} lists row {} but there are only {} rows",
                    j + 1,
                    i + 1,
                    n1
                )));
            }
        }
        let row_index: Vec<_> = rows.iter().map(RankIndex::build).collect();
        let col_index: Vec<_> = cols.iter().map(RankIndex::build).collect();
        for (i, l) in rows.iter().enumerate() {
            for j in l.partners() {
                if col_index[j].get(i).is_none() {
                    return Err(InstanceError::Inconsistent(format!(
                        "row {} lists column {} but column {} does not list row {}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        for (j, l) in cols.iter().enumerate() {
            for i in l.partners() {
                if row_index[i].get(j).is_none() {
                    return Err(InstanceError::Inconsistent(format!(
                        "column {} lists row {} but row {} does not list column {}",
                        j + 1,
                        i + 1,
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self {
            rows,
            cols,
            capacities,
            row_index,
            col_index,
        })
    }

    /// Builds lists from raw groups, naming the offending agent on error.
    pub fn from_groups(
        rows: Vec<Vec<Vec<usize>>>,
        cols: Vec<Vec<Vec<usize>>>,
        capacities: Option<Vec<usize>>,
    ) -> Result<Self, InstanceError> {
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(i, g)| PreferenceList::with_owner(g, &format!("row {}", i + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = cols
            .into_iter()
            .enumerate()
            .map(|(j, g)| PreferenceList::with_owner(g, &format!("column {}", j + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows, cols, capacities)
    }

    pub fn n1(&self) -> usize {
        self.rows.len()
    }

    pub fn n2(&self) -> usize {
        self.cols.len()
    }

    pub fn row_prefs(&self, i: usize) -> &PreferenceList {
        &self.rows[i]
    }

    pub fn col_prefs(&self, j: usize) -> &PreferenceList {
        &self.cols[j]
    }

    pub fn prefs(&self, side: Side) -> &[PreferenceList] {
        match side {
            Side::Row => &self.rows,
            Side::Col => &self.cols,
        }
    }

    pub fn capacities(&self) -> Option<&[usize]> {
        self.capacities.as_deref()
    }

    /// Capacity of column `j`; 1 for one-to-one instances.
    pub fn capacity(&self, j: usize) -> usize {
        self.capacities.as_ref().map_or(1, |c| c[j])
    }

    pub fn is_hrt(&self) -> bool {
        self.capacities.is_some()
    }

    /// Rank of column `j` in row `i`'s list.
    pub fn row_rank(&self, i: usize, j: usize) -> Option<usize> {
        self.row_index[i].get(j)
    }

    /// Rank of row `i` in column `j`'s list.
    pub fn col_rank(&self, j: usize, i: usize) -> Option<usize> {
        self.col_index[j].get(i)
    }

    pub fn is_acceptable(&self, i: usize, j: usize) -> bool {
        i < self.n1() && j < self.n2() && self.row_rank(i, j).is_some()
    }

    /// All acceptable pairs in `(row, col)` lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_index
            .iter()
            .enumerate()
            .flat_map(|(i, idx)| idx.0.iter().map(move |&(j, _)| (i, j)))
    }

    pub fn num_pairs(&self) -> usize {
        self.rows.iter().map(PreferenceList::len).sum()
    }

    pub fn is_strict(&self) -> bool {
        self.rows
            .iter()
            .chain(&self.cols)
            .all(PreferenceList::is_strict)
    }

    /// Swaps the two sides. One-to-one instances only.
    pub fn transpose(&self) -> Result<Instance, InstanceError> {
        if self.is_hrt() {
            return Err(InstanceError::Unsupported(
                "transpose of an instance with capacities",
            ));
        }
        Ok(Self {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            capacities: None,
            row_index: self.col_index.clone(),
            col_index: self.row_index.clone(),
        })
    }

    /// Copy of the instance with the given pairs deleted from both sides.
    pub fn without_pairs(&self, removed: &[(usize, usize)]) -> Instance {
        let mut by_row: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut by_col: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(i, j) in removed {
            by_row.entry(i).or_default().push(j);
            by_col.entry(j).or_default().push(i);
        }
        let mut rows = self.rows.clone();
        let mut cols = self.cols.clone();
        for (i, js) in &by_row {
            rows[*i].retain(|j| !js.contains(&j));
        }
        for (j, is) in &by_col {
            cols[*j].retain(|i| !is.contains(&i));
        }
        let row_index = rows.iter().map(RankIndex::build).collect();
        let col_index = cols.iter().map(RankIndex::build).collect();
        Self {
            rows,
            cols,
            capacities: self.capacities.clone(),
            row_index,
            col_index,
        }
    }

    /// Tie density `1 - (g - n) / (e - n)` of one side.
    pub fn tie_density(&self, side: Side) -> TieDensity {
        let lists = self.prefs(side);
        let (mut g, mut e, mut n) = (0usize, 0usize, 0usize);
        for l in lists.iter().filter(|l| !l.is_empty()) {
            g += l.num_ranks();
            e += l.len();
            n += 1;
        }
        if e <= n {
            return TieDensity {
                value: 0.0,
                degenerate: true,
            };
        }
        TieDensity {
            value: 1.0 - (g - n) as f64 / (e - n) as f64,
            degenerate: false,
        }
    }
}

/// Measured tie density of one side of an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TieDensity {
    pub value: f64,
    /// No agent on the side lists two or more partners.
    pub degenerate: bool,
}

/// An SMTI-GRP instance: acceptable pairs with real weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpInstance {
    n1: usize,
    n2: usize,
    pairs: Vec<(usize, usize, f64)>,
    lookup: HashMap<(usize, usize), f64>,
}

impl GrpInstance {
    pub fn new(
        n1: usize,
        n2: usize,
        mut pairs: Vec<(usize, usize, f64)>,
    ) -> Result<Self, InstanceError> {
        let mut lookup = HashMap::with_capacity(pairs.len());
        for &(i, j, w) in &pairs {
            if i >= n1 || j >= n2 {
                return Err(InstanceError::PairOutOfRange {
                    row: i + 1,
                    col: j + 1,
                    n1,
                    n2,
                });
            }
            if !w.is_finite() {
                return Err(InstanceError::NonFiniteWeight {
                    row: i + 1,
                    col: j + 1,
                });
            }
            if lookup.insert((i, j), w).is_some() {
                return Err(InstanceError::DuplicatePair {
                    row: i + 1,
                    col: j + 1,
                });
            }
        }
        pairs.sort_by_key(|&(i, j, _)| (i, j));
        Ok(Self {
            n1,
            n2,
            pairs,
            lookup,
        })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Weighted pairs in `(row, col)` order.
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.lookup.get(&(i, j)).copied()
    }

    /// Keeps the pairs whose weight is at least `t`.
    pub fn apply_threshold(&self, t: f64) -> GrpInstance {
        let pairs: Vec<_> = self.pairs.iter().copied().filter(|p| p.2 >= t).collect();
        let lookup = pairs.iter().map(|&(i, j, w)| ((i, j), w)).collect();
        GrpInstance {
            n1: self.n1,
            n2: self.n2,
            pairs,
            lookup,
        }
    }

    /// The SMTI instance whose preferences follow the weights: heavier is
    /// better, equal weights are tied.
    pub fn derive_preferences(&self) -> Instance {
        let mut row_w: Vec<Vec<(f64, usize)>> = vec![Vec::new(); self.n1];
        let mut col_w: Vec<Vec<(f64, usize)>> = vec![Vec::new(); self.n2];
        for &(i, j, w) in &self.pairs {
            row_w[i].push((w, j));
            col_w[j].push((w, i));
        }
        let to_list = |mut v: Vec<(f64, usize)>| {
            v.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut groups: Vec<Vec<usize>> = Vec::new();
            let mut last: Option<f64> = None;
            for (w, p) in v {
                if last == Some(w) {
                    groups.last_mut().unwrap().push(p);
                } else {
                    groups.push(vec![p]);
                    last = Some(w);
                }
            }
            PreferenceList { groups }
        };
        let rows = row_w.into_iter().map(to_list).collect();
        let cols = col_w.into_iter().map(to_list).collect();
        Instance::new(rows, cols, None).expect("weights induce consistent lists")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example1() -> GrpInstance {
        let w = [[95.0, 85.0, 80.0], [95.0, 80.0, 80.0], [80.0, 45.0, 75.0]];
        let pairs = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j, w[i][j])))
            .collect();
        GrpInstance::new(3, 3, pairs).unwrap()
    }

    #[test]
    fn derive_groups_equal_weights() {
        let inst = example1().derive_preferences();
        assert_eq!(inst.row_prefs(1).groups(), &[vec![0], vec![1, 2]]);
        assert_eq!(inst.row_prefs(0).groups(), &[vec![0], vec![1], vec![2]]);
        assert_eq!(inst.col_prefs(0).groups(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn derive_full_indifference() {
        let g = GrpInstance::new(1, 3, vec![(0, 0, 7.0), (0, 1, 7.0), (0, 2, 7.0)]).unwrap();
        let inst = g.derive_preferences();
        assert_eq!(inst.row_prefs(0).groups(), &[vec![0, 1, 2]]);
    }

    #[test]
    fn derive_empty() {
        let g = GrpInstance::new(2, 2, vec![]).unwrap();
        let inst = g.derive_preferences();
        assert_eq!(inst.num_pairs(), 0);
        assert!(inst.row_prefs(0).is_empty() && inst.col_prefs(1).is_empty());
    }

    #[test]
    fn threshold_example1() {
        let g = example1().apply_threshold(80.0);
        assert_eq!(g.pairs().len(), 7);
        let c3: Vec<_> = g.pairs().iter().filter(|p| p.0 == 2).collect();
        assert_eq!(c3, vec![&(2, 0, 80.0)]);
        assert_eq!(example1().apply_threshold(f64::NEG_INFINITY), example1());
        assert!(example1().apply_threshold(96.0).pairs().is_empty());
    }

    #[test]
    fn tie_density_cases() {
        let one = |groups: Vec<Vec<usize>>| {
            let cols = (0..3).map(|_| vec![vec![0]]).collect();
            Instance::from_groups(vec![groups], cols, None).unwrap()
        };
        let d = one(vec![vec![0, 1, 2]]).tie_density(Side::Row);
        assert_eq!(d.value, 1.0);
        let d = one(vec![vec![0], vec![1], vec![2]]).tie_density(Side::Row);
        assert_eq!(d.value, 0.0);
        // g = 3, e = 6, n = 2
        let inst = Instance::from_groups(
            vec![vec![vec![0, 1], vec![2]], vec![vec![0, 1, 2]]],
            vec![vec![vec![0, 1]]; 3],
            None,
        )
        .unwrap();
        let d = inst.tie_density(Side::Row);
        assert!(!d.degenerate);
        assert_eq!(d.value, 0.75);
        // every column lists two rows in one tie
        assert_eq!(inst.tie_density(Side::Col).value, 1.0);
    }

    #[test]
    fn tie_density_degenerate() {
        let inst = Instance::from_groups(vec![vec![vec![0]]], vec![vec![vec![0]]], None).unwrap();
        let d = inst.tie_density(Side::Row);
        assert!(d.degenerate);
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn inconsistent_rejected() {
        let e = Instance::from_groups(vec![vec![vec![0]]], vec![vec![]], None).unwrap_err();
        assert!(matches!(e, InstanceError::Inconsistent(_)));
    }

    #[test]
    fn duplicate_and_capacity_errors() {
        let e = Instance::from_groups(vec![vec![vec![0], vec![0]]], vec![vec![vec![0]]], None)
            .unwrap_err();
        assert!(matches!(e, InstanceError::DuplicatePartner { .. }));
        let e = Instance::from_groups(vec![vec![vec![0]]], vec![vec![vec![0]]], Some(vec![0]))
            .unwrap_err();
        assert_eq!(e, InstanceError::NonPositiveCapacity { hospital: 1 });
    }

    #[test]
    fn transpose_swaps_and_rejects_hrt() {
        let inst = example1().derive_preferences();
        let t = inst.transpose().unwrap();
        assert_eq!(t.row_prefs(0), inst.col_prefs(0));
        assert_eq!(t.transpose().unwrap(), inst);
        let hrt =
            Instance::from_groups(vec![vec![vec![0]]], vec![vec![vec![0]]], Some(vec![2])).unwrap();
        assert!(hrt.transpose().is_err());
    }

    #[test]
    fn removal_compacts_groups() {
        let inst = example1().derive_preferences();
        let r = inst.without_pairs(&[(1, 0)]);
        assert_eq!(r.row_prefs(1).groups(), &[vec![1, 2]]);
        assert_eq!(r.row_rank(1, 2), Some(1));
        assert_eq!(r.col_prefs(0).groups(), &[vec![0], vec![2]]);
        assert_eq!(r.num_pairs(), 8);
    }
}
