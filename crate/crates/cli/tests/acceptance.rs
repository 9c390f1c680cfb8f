//! Acceptance suite. Each criterion prints one PASS or FAIL line; the test
//! fails at the end if any criterion did.
//!
//! Run with `cargo test -p stabmatch-cli --test acceptance -- --nocapture`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::cell::Cell;
use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabmatch::generate::{gen_hrt, gen_smti, HrtGenParams, ListLength, MasterList, SmtiGenParams};
use stabmatch::heuristics::{best_of_k, break_ties, gale_shapley};
use stabmatch::model::{build_model, Family, ModelConfig};
use stabmatch::preprocess::{
    first_rank_family, full_child_preferences, reduce_fixpoint, Reduction,
};
use stabmatch::solve::{extract_matching, solve};
use stabmatch::stability::matching_value;
use stabmatch::{Backend, GrpInstance, Instance, Matching, Objective, Side, SolveStatus};

type Check = Result<String, String>;

thread_local! {
    static CHECKED: Cell<usize> = const { Cell::new(0) };
    static UNSTABLE: Cell<usize> = const { Cell::new(0) };
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Solves with the builtin backend and tallies the stability of the result.
fn optimum(
    inst: &Instance,
    g: Option<&GrpInstance>,
    preset: &str,
    objective: Objective,
) -> Result<(f64, Matching), String> {
    let cfg = ModelConfig {
        objective,
        ..ModelConfig::preset(preset).unwrap()
    };
    let model = build_model(inst, g, &cfg).map_err(|e| e.to_string())?;
    let r = solve(&model, &Backend::Builtin, Duration::from_secs(60)).map_err(|e| e.to_string())?;
    if r.status != SolveStatus::Optimal {
        return Err(format!("{preset}: status {}", r.status));
    }
    let m = extract_matching(inst, &r).map_err(|e| e.to_string())?;
    CHECKED.with(|c| c.set(c.get() + 1));
    if !common::is_stable(inst, &m) {
        UNSTABLE.with(|c| c.set(c.get() + 1));
    }
    Ok((matching_value(&m, objective, g).unwrap(), m))
}

fn run(id: usize, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took longer than {:.0?}", l)),
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!(
        "{tag} criterion {id:>2} {title}: {detail} [{:.2}s]",
        elapsed.as_secs_f64()
    );
    outcome.is_ok()
}

fn example1() -> Check {
    let g = common::example1();
    let inst = g.derive_preferences();
    let expected = Matching::from_pairs([(0, 1), (1, 0), (2, 2)]);
    let cut = g.apply_threshold(80.0);
    let cut_inst = cut.derive_preferences();
    for p in ["m1", "m2", "m3", "m4", "m5", "m6"] {
        let (v, m) = optimum(&inst, Some(&g), p, Objective::Weight)?;
        ensure(v == 255.0 && m == expected, || {
            format!("{p}: weight {v}, matching {m:?}")
        })?;
        let (v, m) = optimum(&cut_inst, Some(&cut), p, Objective::Weight)?;
        ensure(v == 180.0 && m.len() == 2, || {
            format!("{p} at 80: weight {v}, size {}", m.len())
        })?;
    }
    Ok("weight 255 with the expected matching; 180 with size 2 at threshold 80, m1..m6".into())
}

fn example2() -> Check {
    let g = common::example2();
    let inst = g.derive_preferences();
    for p in ["m1", "m2", "m3", "m4", "m5", "m6"] {
        let (size, m) = optimum(&inst, Some(&g), p, Objective::Size)?;
        let w = common::weight_of(&m, &g);
        ensure(size == 4.0 && w == 10.0, || {
            format!("{p}: size {size} with weight {w}")
        })?;
        let (weight, m) = optimum(&inst, Some(&g), p, Objective::Weight)?;
        ensure(weight == 11.0 && m.len() == 3, || {
            format!("{p}: weight {weight} with size {}", m.len())
        })?;
    }
    Ok("max size 4 (weight 10), max weight 11 (size 3), m1..m6".into())
}

fn reduction_example() -> Check {
    let inst = common::reduction_example();
    let first = first_rank_family(&inst).map_err(|e| e.to_string())?.pairs();
    ensure(first == vec![(1, 4)], || {
        format!("first-rank-family removed {first:?}")
    })?;
    let after = inst.without_pairs(&first);
    let second = full_child_preferences(&after)
        .map_err(|e| e.to_string())?
        .pairs();
    ensure(second == vec![(0, 3)], || {
        format!("full-child-preferences removed {second:?}")
    })?;
    let after = after.without_pairs(&second);
    for r in Reduction::ROUND {
        let more = r.apply(&after).map_err(|e| e.to_string())?;
        ensure(more.is_empty(), || {
            format!("{r} still removes {:?}", more.pairs())
        })?;
    }
    let (fix, log) = reduce_fixpoint(&inst).map_err(|e| e.to_string())?;
    ensure(fix == after && log.len() == 2, || {
        format!("fixpoint removed {} pairs", log.len())
    })?;
    Ok("(c2,f5) then (c1,f4), then no reduction applies".into())
}

fn soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut count = 0;
    let mut removed = 0;
    for k in 0..600 {
        let td = [0.0, 0.5, 1.0][k % 3];
        let n1 = rng.gen_range(1..=6);
        let n2 = rng.gen_range(1..=6);
        let len = rng.gen_range(1..=n2);
        let inst = gen_smti(&SmtiGenParams {
            n1,
            n2,
            list_length: ListLength { min: 1, max: len },
            tie_density_row: td,
            tie_density_col: td,
            seed: k as u64,
        })
        .map_err(|e| e.to_string())?;
        let (reduced, log) = reduce_fixpoint(&inst).map_err(|e| e.to_string())?;
        removed += log.len();
        ensure(
            common::stable_set(&inst) == common::stable_set(&reduced),
            || format!("stable sets differ on instance {k}"),
        )?;
        count += 1;
    }
    Ok(format!(
        "{count} instances, {removed} pairs removed, 0 discrepancies"
    ))
}

fn cross_model() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut solves = 0;
    for k in 0..300 {
        let g = common::random_grp(
            1000 + k,
            rng.gen_range(1..=6),
            rng.gen_range(1..=6),
            rng.gen_range(0.3..0.9),
            rng.gen_range(1..=5),
        );
        let inst = g.derive_preferences();
        for (objective, w) in [(Objective::Size, None), (Objective::Weight, Some(&g))] {
            let expected = common::best(&inst, w, true);
            for p in 1..=6 {
                let (v, _) = optimum(&inst, Some(&g), &format!("m{p}"), objective)?;
                solves += 1;
                ensure(v == expected, || {
                    format!("smti {k} m{p} {objective:?}: {v} vs {expected}")
                })?;
            }
        }
    }
    for k in 0..300 {
        let n2 = rng.gen_range(1..=3);
        let caps = (0..n2).map(|_| rng.gen_range(1..=2)).collect();
        let inst = common::random_lists(
            2000 + k,
            rng.gen_range(1..=6),
            n2,
            rng.gen_range(0.3..0.9),
            rng.gen_range(1..=3),
            Some(caps),
        );
        let expected = common::best(&inst, None, true);
        for p in 1..=12 {
            let (v, _) = optimum(&inst, None, &format!("n{p}"), Objective::Size)?;
            solves += 1;
            ensure(v == expected, || format!("hrt {k} n{p}: {v} vs {expected}"))?;
        }
    }
    Ok(format!(
        "{solves} solves over 300 SMTI and 300 HRT instances, 0 discrepancies"
    ))
}

fn stability_of_outputs() -> Check {
    let checked = CHECKED.with(Cell::get);
    let unstable = UNSTABLE.with(Cell::get);
    ensure(checked > 0 && unstable == 0, || {
        format!("{unstable} of {checked} matchings block")
    })?;
    Ok(format!("{checked} extracted matchings, 0 blocking pairs"))
}

fn equivalences() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut smti = 0;
    let mut hrt = 0;
    for k in 0..200 {
        let inst = common::random_lists(
            3000 + k,
            rng.gen_range(1..=4),
            rng.gen_range(1..=4),
            rng.gen_range(0.4..1.0),
            rng.gen_range(1..=3),
            None,
        );
        let bad = common::merged_equivalence_failures(&inst);
        ensure(bad == 0, || {
            format!("merged form: {bad} counterexamples on instance {k}")
        })?;
        smti += 1;
    }
    for k in 0..200 {
        let n2 = rng.gen_range(1..=2);
        let caps = (0..n2).map(|_| rng.gen_range(1..=2)).collect();
        let inst = common::random_lists(
            4000 + k,
            rng.gen_range(1..=4),
            n2,
            rng.gen_range(0.4..1.0),
            rng.gen_range(1..=3),
            Some(caps),
        );
        let bad = common::mix_redundancy_failures(&inst);
        ensure(bad == 0, || {
            format!("z with mix: {bad} counterexamples on instance {k}")
        })?;
        hrt += 1;
    }
    Ok(format!(
        "{smti} SMTI and {hrt} HRT instances enumerated, 0 counterexamples"
    ))
}

fn model_sizes() -> Check {
    let count = |inst: &Instance, p: &str, f: Family| {
        build_model(inst, None, &ModelConfig::preset(p).unwrap())
            .unwrap()
            .count_family(f)
    };
    let ranks = |inst: &Instance, side: Side| -> usize {
        inst.prefs(side).iter().map(|l| l.num_ranks()).sum()
    };
    let mut checked = 0;
    for seed in 0..10 {
        let inst = gen_smti(&SmtiGenParams {
            n1: 60,
            n2: 60,
            list_length: ListLength { min: 2, max: 6 },
            tie_density_row: 0.3 * (seed % 4) as f64,
            tie_density_col: 0.5,
            seed,
        })
        .map_err(|e| e.to_string())?;
        let pairs = inst.num_pairs();
        let m1 = count(&inst, "m1", Family::PairStability);
        ensure(m1 == pairs, || {
            format!("m1 has {m1} stability rows for {pairs} pairs")
        })?;
        let m4 = count(&inst, "m4", Family::MergedStability);
        let want = ranks(&inst, Side::Row);
        ensure(m4 == want, || {
            format!("m4 has {m4} merged rows, expected {want}")
        })?;
        let nz = |p: &str| {
            build_model(&inst, None, &ModelConfig::preset(p).unwrap())
                .unwrap()
                .stats()
                .nonzeros
        };
        let (nz1, nz2) = (nz("m1"), nz("m2"));
        ensure(nz2 < nz1, || format!("m2 has {nz2} nonzeros, m1 {nz1}"))?;

        let hrt = gen_hrt(&HrtGenParams {
            n_doctors: 80,
            n_hospitals: 12,
            n_posts: 40,
            list_length: ListLength { min: 1, max: 5 },
            tie_density_hospitals: 0.5,
            master_list: (seed % 2 == 0).then_some(MasterList {
                grades: 4,
                skew: 2.0,
            }),
            seed,
        })
        .map_err(|e| e.to_string())?;
        let n1 = count(&hrt, "n1", Family::PairStability);
        ensure(n1 == hrt.num_pairs(), || {
            format!("n1 has {n1} rows for {} pairs", hrt.num_pairs())
        })?;
        let mix = count(&hrt, "n11", Family::ZMix);
        let want = ranks(&hrt, Side::Col);
        ensure(mix == want, || {
            format!("n11 has {mix} mixed rows, expected {want}")
        })?;
        checked += 2;
    }
    Ok(format!(
        "{checked} instances, all counts match and m2 is sparser than m1"
    ))
}

fn generator_fidelity() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        for td in [0.0, 0.25, 0.5, 0.85, 1.0] {
            let inst = gen_smti(&SmtiGenParams {
                n1: 1000,
                n2: 1000,
                list_length: ListLength { min: 3, max: 7 },
                tie_density_row: td,
                tie_density_col: td,
                seed,
            })
            .map_err(|e| e.to_string())?;
            for side in [Side::Row, Side::Col] {
                let got = inst.tie_density(side).value;
                worst = worst.max((got - td).abs());
                ensure((got - td).abs() <= 0.05, || {
                    format!("seed {seed} {side:?}: {got} for {td}")
                })?;
            }
            let hrt = gen_hrt(&HrtGenParams {
                n_doctors: 1000,
                n_hospitals: 100,
                n_posts: 1000,
                list_length: ListLength { min: 3, max: 7 },
                tie_density_hospitals: td,
                master_list: None,
                seed,
            })
            .map_err(|e| e.to_string())?;
            let got = hrt.tie_density(Side::Col).value;
            worst = worst.max((got - td).abs());
            ensure((got - td).abs() <= 0.05, || {
                format!("hrt seed {seed}: {got} for {td}")
            })?;
        }
        let inst = gen_smti(&SmtiGenParams {
            n1: 300,
            n2: 300,
            list_length: ListLength::exactly(5),
            tie_density_row: 0.85,
            tie_density_col: 0.85,
            seed,
        })
        .map_err(|e| e.to_string())?;
        let warm = best_of_k(&inst, Objective::Size, None, 20, seed).map_err(|e| e.to_string())?;
        ensure(common::is_stable(&inst, &warm), || {
            format!("warm start {seed} is unstable")
        })?;

        let strict = gen_smti(&SmtiGenParams {
            n1: 300,
            n2: 300,
            list_length: ListLength { min: 1, max: 8 },
            tie_density_row: 0.0,
            tie_density_col: 0.0,
            seed,
        })
        .map_err(|e| e.to_string())?;
        let rows = gale_shapley(&strict).map_err(|e| e.to_string())?;
        let cols = gale_shapley(&strict.transpose().unwrap()).map_err(|e| e.to_string())?;
        let other = gale_shapley(&break_ties(&strict, seed + 1)).map_err(|e| e.to_string())?;
        ensure(common::is_stable(&strict, &rows), || {
            format!("GS output {seed} is unstable")
        })?;
        ensure(
            rows.len() == cols.len() && rows.len() == other.len(),
            || {
                format!(
                    "SMI sizes differ on seed {seed}: {} {} {}",
                    rows.len(),
                    cols.len(),
                    other.len()
                )
            },
        )?;
    }
    Ok(format!(
        "worst tie density deviation {worst:.4}; warm starts stable; SMI sizes constant"
    ))
}

fn bench_smoke() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let exe = env!("CARGO_BIN_EXE_stabmatch");
    let mut manifest = String::new();
    for seed in 0..30 {
        let name = format!("smti_{seed:02}.txt");
        let status = Command::new(exe)
            .args([
                "generate",
                "smti",
                "--n1",
                "200",
                "--n2",
                "200",
                "--list-len",
                "5",
            ])
            .args([
                "--tie-density",
                "0.85",
                "--seed",
                &seed.to_string(),
                "-o",
                &name,
            ])
            .current_dir(dir.path())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || {
            format!("generate failed for seed {seed}")
        })?;
        for p in ["m1", "m3", "m4"] {
            manifest.push_str(&format!("{name} {p}\n"));
        }
    }
    fs::write(dir.path().join("manifest.txt"), manifest).map_err(|e| e.to_string())?;
    let out = Command::new(exe)
        .args([
            "bench",
            "manifest.txt",
            "--preprocess",
            "--warm-start",
            "100",
        ])
        .args(["--time-limit", "120", "-o", "bench.csv"])
        .current_dir(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        String::from_utf8_lossy(&out.stderr).into_owned()
    })?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("bench.csv"))
        .map_err(|e| e.to_string())?;
    let mut by_instance: BTreeMap<String, Vec<(String, String, String)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        by_instance.entry(rec[0].to_string()).or_default().push((
            rec[1].to_string(),
            rec[2].to_string(),
            rec[3].to_string(),
        ));
    }
    ensure(by_instance.len() == 30, || {
        format!("{} instances in the CSV", by_instance.len())
    })?;
    let mut optimal = 0;
    for (inst, rows) in &by_instance {
        ensure(rows.len() == 3, || format!("{inst}: {} rows", rows.len()))?;
        ensure(
            rows.iter().all(|r| r.2 == rows[0].2 && !r.2.is_empty()),
            || format!("{inst}: objectives differ {rows:?}"),
        )?;
        optimal += rows.iter().filter(|r| r.1 == "optimal").count();
    }
    ensure(optimal == 90, || {
        format!("only {optimal}/90 runs proved optimal")
    })?;
    Ok("30 instances x m1/m3/m4: identical objectives, 90/90 optimal".into())
}

#[test]
fn acceptance() {
    let s = |secs| Some(Duration::from_secs(secs));
    let results = [
        run(1, "example 1 reproduction", s(1), example1),
        run(2, "example 2 reproduction", s(1), example2),
        run(3, "preprocessing walkthrough", s(1), reduction_example),
        run(4, "preprocessing soundness", s(60), soundness),
        run(5, "cross-model agreement", s(300), cross_model),
        run(6, "stability of all outputs", None, stability_of_outputs),
        run(
            7,
            "integral equivalence and redundancy",
            s(30),
            equivalences,
        ),
        run(8, "model-size accounting", None, model_sizes),
        run(9, "generator fidelity", None, generator_fidelity),
        run(10, "benchmark smoke test", s(600), bench_smoke),
    ];
    let failed: Vec<usize> = (1..=10).filter(|&i| !results[i - 1]).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
