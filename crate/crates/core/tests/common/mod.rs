//! Brute-force reference for the integration tests, written straight from
//! the definitions. It shares no code with the library's solvers.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabmatch::model::{build_model, parse_var_name, Family, IlpModel, ModelConfig, VarClass};
use stabmatch::{GrpInstance, Instance, Matching};

pub type Pairs = Vec<(usize, usize)>;

/// Weak stability: no acceptable pair outside `m` where the row is free or
/// strictly prefers the column, and the column has room or strictly prefers
/// the row to one of its members.
pub fn blocking(inst: &Instance, m: &Matching) -> Pairs {
    let mut partner = vec![None; inst.n1()];
    let mut members = vec![Vec::new(); inst.n2()];
    for (i, j) in m.pairs() {
        partner[i] = Some(j);
        members[j].push(i);
    }
    let mut out = Vec::new();
    for i in 0..inst.n1() {
        for j in 0..inst.n2() {
            let Some(ri) = inst.row_rank(i, j) else {
                continue;
            };
            if partner[i] == Some(j) {
                continue;
            }
            let row_gains = partner[i].is_none_or(|p| ri < inst.row_rank(i, p).unwrap());
            let cj = inst.col_rank(j, i).unwrap();
            let col_gains = members[j].len() < inst.capacity(j)
                || members[j]
                    .iter()
                    .any(|&o| cj < inst.col_rank(j, o).unwrap());
            if row_gains && col_gains {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn is_valid(inst: &Instance, m: &Matching) -> bool {
    let mut rows = vec![0; inst.n1()];
    let mut cols = vec![0; inst.n2()];
    for (i, j) in m.pairs() {
        if i >= inst.n1() || j >= inst.n2() || inst.row_rank(i, j).is_none() {
            return false;
        }
        rows[i] += 1;
        cols[j] += 1;
    }
    rows.iter().all(|&c| c <= 1) && (0..inst.n2()).all(|j| cols[j] <= inst.capacity(j))
}

pub fn is_stable(inst: &Instance, m: &Matching) -> bool {
    is_valid(inst, m) && blocking(inst, m).is_empty()
}

/// Every matching: each row takes one acceptable column with room, or none.
pub fn all_matchings(inst: &Instance) -> Vec<Matching> {
    fn go(
        inst: &Instance,
        i: usize,
        load: &mut Vec<usize>,
        cur: &mut Pairs,
        out: &mut Vec<Matching>,
    ) {
        if i == inst.n1() {
            out.push(cur.iter().copied().collect());
            return;
        }
        go(inst, i + 1, load, cur, out);
        for j in 0..inst.n2() {
            if inst.row_rank(i, j).is_some() && load[j] < inst.capacity(j) {
                load[j] += 1;
                cur.push((i, j));
                go(inst, i + 1, load, cur, out);
                cur.pop();
                load[j] -= 1;
            }
        }
    }
    let mut out = Vec::new();
    go(inst, 0, &mut vec![0; inst.n2()], &mut Vec::new(), &mut out);
    out
}

pub fn stable_set(inst: &Instance) -> BTreeSet<Pairs> {
    all_matchings(inst)
        .into_iter()
        .filter(|m| is_stable(inst, m))
        .map(|m| m.pairs().collect())
        .collect()
}

pub fn weight_of(m: &Matching, g: &GrpInstance) -> f64 {
    m.pairs().map(|(i, j)| g.weight(i, j).unwrap()).sum()
}

/// Best size, or best weight when `weights` is given, over stable matchings
/// (or all matchings when `stable` is false).
pub fn best(inst: &Instance, weights: Option<&GrpInstance>, stable: bool) -> f64 {
    all_matchings(inst)
        .into_iter()
        .filter(|m| !stable || is_stable(inst, m))
        .map(|m| weights.map_or(m.len() as f64, |g| weight_of(&m, g)))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn groups_from_ranks(mut ranked: Vec<(usize, usize)>) -> Vec<Vec<usize>> {
    ranked.sort();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut last = None;
    for (r, p) in ranked {
        if last == Some(r) {
            out.last_mut().unwrap().push(p);
        } else {
            out.push(vec![p]);
            last = Some(r);
        }
    }
    out
}

/// Random instance: each pair acceptable with probability `p`; each agent
/// scores its partners in `1..=levels`, equal scores forming ties.
pub fn random_lists(
    seed: u64,
    n1: usize,
    n2: usize,
    p: f64,
    levels: usize,
    capacities: Option<Vec<usize>>,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let acceptable: Vec<Vec<bool>> = (0..n1)
        .map(|_| (0..n2).map(|_| rng.gen_bool(p)).collect())
        .collect();
    let rows = (0..n1)
        .map(|i| {
            let ranked = (0..n2)
                .filter(|&j| acceptable[i][j])
                .map(|j| (rng.gen_range(1..=levels), j))
                .collect();
            groups_from_ranks(ranked)
        })
        .collect();
    let cols = (0..n2)
        .map(|j| {
            let ranked = (0..n1)
                .filter(|&i| acceptable[i][j])
                .map(|i| (rng.gen_range(1..=levels), i))
                .collect();
            groups_from_ranks(ranked)
        })
        .collect();
    Instance::from_groups(rows, cols, capacities).unwrap()
}

/// Random weighted instance with integer weights in `1..=wmax`.
pub fn random_grp(seed: u64, n1: usize, n2: usize, p: f64, wmax: u32) -> GrpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for i in 0..n1 {
        for j in 0..n2 {
            if rng.gen_bool(p) {
                pairs.push((i, j, f64::from(rng.gen_range(1..=wmax))));
            }
        }
    }
    GrpInstance::new(n1, n2, pairs).unwrap()
}

pub fn example1() -> GrpInstance {
    let w = [[95.0, 85.0, 80.0], [95.0, 80.0, 80.0], [80.0, 45.0, 75.0]];
    let pairs = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j, w[i][j])))
        .collect();
    GrpInstance::new(3, 3, pairs).unwrap()
}

pub fn example2() -> GrpInstance {
    let pairs = vec![
        (0, 0, 1.0),
        (1, 0, 4.0),
        (1, 1, 4.0),
        (2, 1, 3.0),
        (2, 2, 4.0),
        (3, 2, 4.0),
        (3, 3, 1.0),
    ];
    GrpInstance::new(4, 4, pairs).unwrap()
}

/// Four children and five families from the preprocessing walkthrough.
pub fn reduction_example() -> Instance {
    let rows = vec![
        vec![vec![0, 1, 2], vec![3]],
        vec![vec![1, 2, 3], vec![4]],
        vec![vec![0, 2, 3]],
        vec![vec![0, 1, 3]],
    ];
    let cols = vec![
        vec![vec![0, 2], vec![3]],
        vec![vec![0, 1], vec![3]],
        vec![vec![1, 2], vec![0]],
        vec![vec![0, 1], vec![2, 3]],
        vec![vec![1]],
    ];
    Instance::from_groups(rows, cols, None).unwrap()
}

/// Values for every `x`, `y` and `yp` of `model` induced by `m`, with `z`
/// left at 0. Also returns the positions of the `z` variables.
pub fn induced_values(model: &IlpModel, inst: &Instance, m: &Matching) -> (Vec<f64>, Vec<usize>) {
    let mut values = vec![0.0; model.variables().len()];
    let mut zs = Vec::new();
    for (idx, v) in model.variables().iter().enumerate() {
        let (class, a, b) = parse_var_name(&v.name).unwrap();
        values[idx] = match class {
            VarClass::X => f64::from(u8::from(m.contains(a, b))),
            VarClass::Y => f64::from(u8::from(
                m.pairs()
                    .any(|(i, j)| i == a && inst.row_rank(i, j).unwrap() <= b),
            )),
            VarClass::Yp => m
                .pairs()
                .filter(|&(i, j)| j == a && inst.col_rank(j, i).unwrap() <= b)
                .count() as f64,
            VarClass::Z => {
                zs.push(idx);
                0.0
            }
        };
    }
    (values, zs)
}

/// Whether every constraint of `family` holds at `values`.
pub fn family_holds(model: &IlpModel, family: Family, values: &[f64]) -> bool {
    model
        .constraints()
        .iter()
        .filter(|c| c.family == Some(family))
        .all(|c| c.rel.holds(c.expr.eval(values), c.rhs, 1e-9))
}

/// Counterexamples to "pairwise dummy stability holds iff merged stability
/// holds iff the matching is stable", over every matching with coherent
/// dummies.
pub fn merged_equivalence_failures(inst: &Instance) -> usize {
    let m2 = build_model(inst, None, &ModelConfig::preset("m2").unwrap()).unwrap();
    let m4 = build_model(inst, None, &ModelConfig::preset("m4").unwrap()).unwrap();
    all_matchings(inst)
        .iter()
        .filter(|m| {
            let a = family_holds(&m2, Family::DummyStability, &induced_values(&m2, inst, m).0);
            let b = family_holds(
                &m4,
                Family::MergedStability,
                &induced_values(&m4, inst, m).0,
            );
            !(a == b && b == is_stable(inst, m))
        })
        .count()
}

/// Counterexamples to "every integral point of the z-with-mix model satisfies
/// the pairwise dummy constraints", plus stable matchings that the z model
/// cuts off entirely.
pub fn mix_redundancy_failures(inst: &Instance) -> usize {
    let zmix = build_model(inst, None, &ModelConfig::preset("n11").unwrap()).unwrap();
    let pairwise = build_model(inst, None, &ModelConfig::preset("n2").unwrap()).unwrap();
    let mut failures = 0;
    for m in all_matchings(inst) {
        let (mut values, zs) = induced_values(&zmix, inst, &m);
        let pairwise_holds = family_holds(
            &pairwise,
            Family::DummyStability,
            &induced_values(&pairwise, inst, &m).0,
        );
        let mut feasible = false;
        for mask in 0u64..1 << zs.len() {
            for (bit, &idx) in zs.iter().enumerate() {
                values[idx] = f64::from(u8::from(mask >> bit & 1 == 1));
            }
            if zmix.check_assignment(&values, 1e-9).is_ok() {
                feasible = true;
                if !pairwise_holds {
                    failures += 1;
                }
            }
        }
        if feasible != is_stable(inst, &m) {
            failures += 1;
        }
    }
    failures
}
