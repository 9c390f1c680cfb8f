//! Seeded random instance generators.
//!
//! Ties come from walking each list and merging every consecutive pair into
//! one group with probability `t_d`; the expected measured tie density of a
//! side is then `t_d`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{GrpInstance, Instance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

fn invalid(msg: impl Into<String>) -> GenerateError {
    GenerateError::InvalidParams(msg.into())
}

/// Inclusive range of list lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ListLength {
    pub min: usize,
    pub max: usize,
}

impl ListLength {
    pub fn exactly(n: usize) -> Self {
        Self { min: n, max: n }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

impl FromStr for ListLength {
    type Err = String;

    /// `5` or `5-6`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid list length `{s}`"))
        };
        let (min, max) = match s.split_once('-') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(s)?, num(s)?),
        };
        if min > max {
            return Err(format!("empty list length range `{s}`"));
        }
        Ok(Self { min, max })
    }
}

impl fmt::Display for ListLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.min == self.max {
            write!(f, "{}", self.min)
        } else {
            write!(f, "{}-{}", self.min, self.max)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmtiGenParams {
    pub n1: usize,
    pub n2: usize,
    pub list_length: ListLength,
    pub tie_density_row: f64,
    pub tie_density_col: f64,
    pub seed: u64,
}

/// Doctor grades shared by every hospital.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterList {
    /// Number of distinct grades `j`.
    pub grades: usize,
    /// How many times more likely the most common grade is than the least.
    pub skew: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrtGenParams {
    pub n_doctors: usize,
    pub n_hospitals: usize,
    pub n_posts: usize,
    pub list_length: ListLength,
    pub tie_density_hospitals: f64,
    pub master_list: Option<MasterList>,
    pub seed: u64,
}

fn check_density(name: &str, td: f64) -> Result<(), GenerateError> {
    if (0.0..=1.0).contains(&td) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {td}")))
    }
}

fn with_ties(order: &[usize], td: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &p) in order.iter().enumerate() {
        if k > 0 && rng.gen_bool(td) {
            groups.last_mut().unwrap().push(p);
        } else {
            groups.push(vec![p]);
        }
    }
    groups
}

fn row_lists(n1: usize, n2: usize, len: ListLength, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    (0..n1)
        .map(|_| {
            let l = len.sample(rng);
            index::sample(rng, n2, l).into_vec()
        })
        .collect()
}

fn applicants(rows: &[Vec<usize>], n2: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n2];
    for (i, list) in rows.iter().enumerate() {
        for &j in list {
            out[j].push(i);
        }
    }
    out
}

pub fn gen_smti(p: &SmtiGenParams) -> Result<Instance, GenerateError> {
    if p.list_length.max > p.n2 {
        return Err(invalid(format!(
            "list length {} exceeds the {} columns",
            p.list_length.max, p.n2
        )));
    }
    check_density("row tie density", p.tie_density_row)?;
    check_density("column tie density", p.tie_density_col)?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rows = row_lists(p.n1, p.n2, p.list_length, &mut rng);
    let mut cols = applicants(&rows, p.n2);
    for c in &mut cols {
        c.shuffle(&mut rng);
    }
    let row_groups = rows
        .iter()
        .map(|l| with_ties(l, p.tie_density_row, &mut rng))
        .collect();
    let col_groups = cols
        .iter()
        .map(|l| with_ties(l, p.tie_density_col, &mut rng))
        .collect();
    Ok(
        Instance::from_groups(row_groups, col_groups, None)
            .expect("generated lists are consistent"),
    )
}

/// Sampling weight of grade `g` in `1..=j`: `x` for grade 1 falling linearly
/// to 1 for grade `j`.
pub fn grade_weight(g: usize, j: usize, x: f64) -> f64 {
    if j <= 1 {
        return 1.0;
    }
    x + (1.0 - x) * (g - 1) as f64 / (j - 1) as f64
}

pub fn gen_hrt(p: &HrtGenParams) -> Result<Instance, GenerateError> {
    if p.n_hospitals == 0 && p.n_doctors > 0 && p.list_length.max > 0 {
        return Err(invalid("doctors need hospitals to apply to"));
    }
    if p.n_posts < p.n_hospitals {
        return Err(invalid(format!(
            "{} posts cannot give each of {} hospitals a post",
            p.n_posts, p.n_hospitals
        )));
    }
    if p.list_length.max > p.n_hospitals {
        return Err(invalid(format!(
            "list length {} exceeds the {} hospitals",
            p.list_length.max, p.n_hospitals
        )));
    }
    check_density("hospital tie density", p.tie_density_hospitals)?;
    if let Some(m) = p.master_list {
        if m.grades == 0 {
            return Err(invalid("a master list needs at least one grade"));
        }
        if !(m.skew.is_finite() && m.skew > 0.0) {
            return Err(invalid(format!("skew must be positive, got {}", m.skew)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let rows = row_lists(p.n_doctors, p.n_hospitals, p.list_length, &mut rng);
    let apps = applicants(&rows, p.n_hospitals);
    let col_groups: Vec<Vec<Vec<usize>>> = match p.master_list {
        Some(m) => {
            let weights: Vec<f64> = (1..=m.grades)
                .map(|g| grade_weight(g, m.grades, m.skew))
                .collect();
            let dist = WeightedIndex::new(&weights).map_err(|e| invalid(e.to_string()))?;
            let grade: Vec<usize> = (0..p.n_doctors)
                .map(|_| dist.sample(&mut rng) + 1)
                .collect();
            apps.iter()
                .map(|a| {
                    let mut by_grade: Vec<(usize, usize)> =
                        a.iter().map(|&i| (grade[i], i)).collect();
                    by_grade.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
                    let mut groups: Vec<Vec<usize>> = Vec::new();
                    let mut last = None;
                    for (g, i) in by_grade {
                        if last == Some(g) {
                            groups.last_mut().unwrap().push(i);
                        } else {
                            groups.push(vec![i]);
                            last = Some(g);
                        }
                    }
                    groups
                })
                .collect()
        }
        None => apps
            .into_iter()
            .map(|mut a| {
                a.shuffle(&mut rng);
                with_ties(&a, p.tie_density_hospitals, &mut rng)
            })
            .collect(),
    };
    let mut caps = vec![p.n_posts.checked_div(p.n_hospitals).unwrap_or(0); p.n_hospitals];
    if p.n_hospitals > 0 {
        for h in index::sample(&mut rng, p.n_hospitals, p.n_posts % p.n_hospitals) {
            caps[h] += 1;
        }
    }
    let row_groups = rows
        .into_iter()
        .map(|l| l.into_iter().map(|j| vec![j]).collect())
        .collect();
    Ok(Instance::from_groups(row_groups, col_groups, Some(caps))
        .expect("generated lists are consistent"))
}

/// Position shifts and their probabilities for [`augment_grp`].
pub const PERTURBATION: [(i64, f64); 5] = [(-2, 0.1), (-1, 0.2), (0, 0.4), (1, 0.2), (2, 0.1)];

/// Share of all pairs a distinct weight needs to count as common.
pub const COMMON_SHARE: f64 = 0.01;

/// Groups with fewer distinct weights than this keep weights unperturbed.
pub const MIN_GROUP: usize = 5;

/// `kappa` copies of every agent with perturbed weights, using
/// [`PERTURBATION`].
pub fn augment_grp(g: &GrpInstance, kappa: usize, seed: u64) -> Result<GrpInstance, GenerateError> {
    augment_grp_with(g, kappa, seed, &PERTURBATION)
}

/// Copy `a` of row `i` becomes row `i * kappa + a`, likewise for columns.
/// Each copied weight moves `x` places within the sorted distinct weights of
/// its group (common or uncommon), `x` drawn from `shifts`, clamped to the
/// ends of the group.
pub fn augment_grp_with(
    g: &GrpInstance,
    kappa: usize,
    seed: u64,
    shifts: &[(i64, f64)],
) -> Result<GrpInstance, GenerateError> {
    if kappa < 1 {
        return Err(invalid("kappa must be at least 1"));
    }
    let dist =
        WeightedIndex::new(shifts.iter().map(|s| s.1)).map_err(|e| invalid(e.to_string()))?;
    let total = g.pairs().len();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &(_, _, w) in g.pairs() {
        *counts.entry(w.to_bits()).or_default() += 1;
    }
    let is_common = |w: f64| counts[&w.to_bits()] as f64 >= COMMON_SHARE * total as f64;
    let mut common: Vec<f64> = Vec::new();
    let mut uncommon: Vec<f64> = Vec::new();
    for &bits in counts.keys() {
        let w = f64::from_bits(bits);
        if is_common(w) {
            common.push(w);
        } else {
            uncommon.push(w);
        }
    }
    common.sort_by(f64::total_cmp);
    uncommon.sort_by(f64::total_cmp);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(total * kappa * kappa);
    for &(i, j, w) in g.pairs() {
        let group = if is_common(w) { &common } else { &uncommon };
        let pos = group
            .iter()
            .position(|&v| v.to_bits() == w.to_bits())
            .unwrap() as i64;
        for a in 0..kappa {
            for b in 0..kappa {
                let shift = shifts[dist.sample(&mut rng)].0;
                let new = if group.len() < MIN_GROUP {
                    w
                } else {
                    group[(pos + shift).clamp(0, group.len() as i64 - 1) as usize]
                };
                pairs.push((i * kappa + a, j * kappa + b, new));
            }
        }
    }
    Ok(GrpInstance::new(g.n1() * kappa, g.n2() * kappa, pairs).expect("copies are distinct pairs"))
}
