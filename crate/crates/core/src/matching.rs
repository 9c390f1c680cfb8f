use std::collections::BTreeSet;

/// A set of `(row, col)` pairs. Validity against an instance is checked by
/// [`crate::stability::check_matching`], not on construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Matching {
    pairs: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn insert(&mut self, row: usize, col: usize) -> bool {
        self.pairs.insert((row, col))
    }

    pub fn remove(&mut self, row: usize, col: usize) -> bool {
        self.pairs.remove(&(row, col))
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.pairs.contains(&(row, col))
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Column of the first pair containing `row`.
    pub fn partner_of_row(&self, row: usize) -> Option<usize> {
        self.pairs
            .range((row, 0)..=(row, usize::MAX))
            .next()
            .map(|&(_, j)| j)
    }

    /// Per-row partner and per-column member lists, ignoring out-of-range pairs.
    pub(crate) fn assignment(&self, n1: usize, n2: usize) -> (Vec<Option<usize>>, Vec<Vec<usize>>) {
        let mut row_of = vec![None; n1];
        let mut members = vec![Vec::new(); n2];
        for (i, j) in self.pairs() {
            if i < n1 && j < n2 {
                row_of[i].get_or_insert(j);
                members[j].push(i);
            }
        }
        (row_of, members)
    }
}

impl FromIterator<(usize, usize)> for Matching {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        Self::from_pairs(iter)
    }
}
