//! Acceptance suite. Runs every acceptance criterion, prints one PASS/FAIL
//! line per criterion and exits nonzero if any fails.

#[path = "../../analysis/tests/oracle/mod.rs"]
mod oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use setrules_analysis::synth::{random_fact_base, SynthShape};
use setrules_analysis::{run_pa, PaVariant};
use setrules_bench::gen::{gen_rbac_workload, gen_tc_graph, RbacWorkloadConfig, TcGenConfig};
use setrules_bench::run::{closure, compare_rbac_variants, run_rbac_benchmark, run_tc_benchmark, TcVariant};
use setrules_bench::timing::Phase;
use setrules_core::random::{random_edges, random_program, ProgramShape};
use setrules_core::{
    eval_naive, eval_stratified, eval_well_founded, infer, parse_rules, rulesets, Binding, Constant, Database,
    MaintainedStore, Maintenance, Relation, RuleSet, Tuple,
};
use setrules_rbac::Variant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// Closure oracle over a dense adjacency matrix.
fn floyd_warshall(edges: &Relation, n: usize) -> BTreeSet<(Constant, Constant)> {
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in edges.pairs() {
        reach[a.as_int().unwrap() as usize][b.as_int().unwrap() as usize] = true;
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (r, &v) in row.iter_mut().zip(&via) {
                *r |= v;
            }
        }
    }
    let mut out = BTreeSet::new();
    for (i, row) in reach.iter().enumerate() {
        for (j, &r) in row.iter().enumerate() {
            if r {
                out.insert((Constant::Int(i as i64), Constant::Int(j as i64)));
            }
        }
    }
    out
}

fn tc_saturation() -> Outcome {
    let edges = gen_tc_graph(&TcGenConfig {
        vertices: 1000,
        edges: 10_000,
        cyclic: true,
        seed: 1,
    })
    .map_err(err)?;
    let start = Instant::now();
    let run = run_tc_benchmark(TcVariant::Tc, &edges, 10_000, 1, 1).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    ensure(run.result.len() == 1_000_000, || format!("{} pairs, expected 1000000", run.result.len()))?;
    ensure(secs <= 120.0, || format!("took {secs:.1}s, limit 120s"))?;
    Ok(format!("1000000 pairs in {secs:.2}s"))
}

fn tc_variants_agree() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..200 {
        let n = rng.gen_range(1..=50u64);
        let cap = n * (n - 1);
        let cyclic = i % 2 == 0;
        let max_edges = if cyclic { cap } else { cap / 2 };
        let m = rng.gen_range(0..=max_edges.min(3 * n));
        let edges = gen_tc_graph(&TcGenConfig {
            vertices: n,
            edges: m,
            cyclic,
            seed: rng.gen(),
        })
        .map_err(err)?;
        let expected = floyd_warshall(&edges, n as usize);
        for v in TcVariant::ALL {
            let got: BTreeSet<_> = closure(v, &edges).map_err(err)?.pairs().collect();
            ensure(got == expected, || {
                format!("graph {i} ({n} vertices, {m} edges): {} gives {} pairs, oracle {}", v.name(), got.len(), expected.len())
            })?;
        }
    }
    Ok("200 graphs, 4 variants match the oracle".into())
}

fn tc_speedups() -> Outcome {
    let edges = gen_tc_graph(&TcGenConfig {
        vertices: 100,
        edges: 200,
        cyclic: true,
        seed: 3,
    })
    .map_err(err)?;
    let total = |v: TcVariant, repeats: usize| -> Result<f64, String> {
        let run = run_tc_benchmark(v, &edges, 200, 3, repeats).map_err(err)?;
        Ok(run.records.iter().find(|r| r.phase == Phase::Total).unwrap().cpu_seconds_mean)
    };
    let tc = total(TcVariant::Tc, 20)?;
    let some = total(TcVariant::WhileSome, 2)?;
    let rescan = total(TcVariant::WhileRescan, 2)?;
    let (r_rescan, r_some) = (rescan / tc, some / tc);
    let summary = format!("whilerescan/tc = {r_rescan:.0}x, whilesome/tc = {r_some:.0}x");
    ensure(r_rescan >= 10.0 && r_some >= 5.0, || summary.clone())?;
    Ok(summary)
}

fn derived_or_empty(db: &Database, rs: &RuleSet, pred: &str) -> Relation {
    db.get(pred)
        .cloned()
        .unwrap_or_else(|| Relation::new(pred, rs.arity(pred).unwrap_or(0)))
}

fn stratified_matches_naive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..500 {
        let (rs, db) = random_program(&mut rng, &ProgramShape::default());
        let fast = eval_stratified(&db, &rs).map_err(err)?;
        let slow = eval_naive(&db, &rs).map_err(err)?;
        for p in rs.derived_preds() {
            ensure(derived_or_empty(&fast, &rs, p) == derived_or_empty(&slow, &rs, p), || {
                format!("program {i}, predicate {p}:\n{rs}")
            })?;
        }
    }
    Ok("500 programs".into())
}

// Game oracle by retrograde analysis: positions without moves are lost, a
// position with a move to a lost one is won, a position whose moves all lead
// to won ones is lost, and the rest are drawn.
fn game_oracle(moves: &[(i64, i64)]) -> (BTreeSet<i64>, BTreeSet<i64>) {
    let mut succ: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    let mut pred: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for &(a, b) in moves {
        succ.entry(a).or_default().push(b);
        succ.entry(b).or_default();
        pred.entry(b).or_default().push(a);
    }
    let mut open: BTreeMap<i64, usize> = succ.iter().map(|(&v, s)| (v, s.len())).collect();
    let mut won = BTreeSet::new();
    let mut lost = BTreeSet::new();
    let mut queue: Vec<i64> = open.iter().filter(|&(_, &d)| d == 0).map(|(&v, _)| v).collect();
    lost.extend(queue.iter().copied());
    while let Some(v) = queue.pop() {
        for &p in pred.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
            if won.contains(&p) || lost.contains(&p) {
                continue;
            }
            if lost.contains(&v) {
                won.insert(p);
                queue.push(p);
            } else {
                let d = open.get_mut(&p).unwrap();
                *d -= 1;
                if *d == 0 {
                    lost.insert(p);
                    queue.push(p);
                }
            }
        }
    }
    let drawn = succ.keys().filter(|v| !won.contains(v) && !lost.contains(v)).copied().collect();
    (won, drawn)
}

fn win_model(moves: &[(i64, i64)]) -> Result<(BTreeSet<i64>, BTreeSet<i64>), String> {
    let rs = parse_rules(rulesets::WIN).map_err(err)?;
    let mut db = Database::new();
    db.insert_relation(Relation::from_pairs("move", moves.iter().copied()));
    let wf = eval_well_founded(&db, &rs).map_err(err)?;
    let ints = |d: &Database| -> BTreeSet<i64> {
        d.get("win")
            .map(|r| r.iter().map(|t| t.items()[0].as_int().unwrap()).collect())
            .unwrap_or_default()
    };
    Ok((ints(&wf.true_facts), ints(&wf.undefined_facts)))
}

fn well_founded_suite() -> Outcome {
    for len in 1..=10i64 {
        let moves: Vec<(i64, i64)> = (0..len).map(|i| (i, i + 1)).collect();
        let (won, undefined) = win_model(&moves)?;
        let expected: BTreeSet<i64> = (0..len).filter(|i| (len - i) % 2 == 1).collect();
        ensure(won == expected && undefined.is_empty(), || format!("chain of {len} moves: won {won:?}"))?;
    }
    for k in [2i64, 3] {
        let moves: Vec<(i64, i64)> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        let (won, undefined) = win_model(&moves)?;
        ensure(won.is_empty() && undefined == (0..k).collect(), || format!("{k}-cycle: won {won:?}, undefined {undefined:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..100 {
        let n = rng.gen_range(1..=12usize);
        let m = rng.gen_range(0..=2 * n);
        let edges = random_edges(&mut rng, n, m);
        let moves: Vec<(i64, i64)> = edges.pairs().map(|(a, b)| (a.as_int().unwrap(), b.as_int().unwrap())).collect();
        let got = win_model(&moves)?;
        let expected = game_oracle(&moves);
        ensure(got == expected, || format!("move graph {i} {moves:?}: got {got:?}, oracle {expected:?}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..500 {
        let (rs, db) = random_program(&mut rng, &ProgramShape::default());
        let wf = eval_well_founded(&db, &rs).map_err(err)?;
        ensure(wf.is_two_valued(), || format!("stratified program {i} has undefined facts"))?;
        let strat = eval_stratified(&db, &rs).map_err(err)?;
        for p in rs.derived_preds() {
            ensure(derived_or_empty(&wf.true_facts, &rs, p) == derived_or_empty(&strat, &rs, p), || {
                format!("stratified program {i}, predicate {p}")
            })?;
        }
    }
    Ok("chains, cycles, 100 move graphs, 500 stratified programs".into())
}

fn modsg_is_difference() -> Outcome {
    let sg = parse_rules(rulesets::SG).map_err(err)?;
    let nonsg = parse_rules(rulesets::NONSG).map_err(err)?;
    let modsg = parse_rules(rulesets::MODSG).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100 {
        let n = rng.gen_range(1..=15usize);
        let m = rng.gen_range(0..=2 * n);
        let par = random_edges(&mut rng, n, m).with_name("par");
        let binding = Binding::new().bind("par", &par);
        let all: BTreeSet<Tuple> = infer(&sg, &binding, &["sg"]).map_err(err)?[0].iter().cloned().collect();
        let not: BTreeSet<Tuple> = infer(&nonsg, &binding, &["nonsg"]).map_err(err)?[0].iter().cloned().collect();
        let got: BTreeSet<Tuple> = infer(&modsg, &binding, &["sg2"]).map_err(err)?[0].iter().cloned().collect();
        let expected: BTreeSet<Tuple> = all.difference(&not).cloned().collect();
        ensure(got == expected, || format!("instance {i}: {} pairs, expected {}", got.len(), expected.len()))?;
    }
    Ok("100 instances".into())
}

fn rbac_variants_agree() -> Outcome {
    let mut queries = 0;
    for seed in 0..20 {
        let workload = gen_rbac_workload(&RbacWorkloadConfig {
            seed,
            ..RbacWorkloadConfig::small()
        })
        .map_err(err)?;
        let runs = compare_rbac_variants(&Variant::ALL, &workload, seed, 1).map_err(err)?;
        queries += runs[0].answers.len();
    }
    Ok(format!("20 workloads, {queries} queries, 5 variants"))
}

fn maintained_binding() -> Outcome {
    for (mode, seed) in [(Maintenance::Eager, 7), (Maintenance::Lazy, 8)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rs, db) = loop {
            let (rs, db) = random_program(&mut rng, &ProgramShape::default());
            if !rs.base_preds().is_empty() && !rs.derived_preds().is_empty() {
                break (rs, db);
            }
        };
        let base_map: BTreeMap<String, String> = rs.base_preds().iter().map(|p| (p.clone(), format!("B_{p}"))).collect();
        let derived_map: BTreeMap<String, String> =
            rs.derived_preds().iter().map(|p| (p.clone(), format!("D_{p}"))).collect();
        let mut store = MaintainedStore::with_mode(Database::new(), mode);
        for rel in db.relations().filter(|r| rs.is_base(r.name())) {
            store.assert_facts(&base_map[rel.name()], rel.iter().cloned().collect()).map_err(err)?;
        }
        let id = store.register(rs.clone(), base_map.clone(), derived_map).map_err(err)?;
        let bases: Vec<(String, usize)> = rs.base_preds().iter().map(|p| (p.clone(), rs.arity(p).unwrap())).collect();
        let queries: Vec<&str> = rs.derived_preds().iter().map(String::as_str).collect();
        for step in 0..1000 {
            let (pred, arity) = bases.choose(&mut rng).unwrap();
            let mut tuples = || -> Vec<Tuple> {
                (0..rng.gen_range(0..3))
                    .map(|_| (0..*arity).map(|_| Constant::Int(rng.gen_range(0..8))).collect())
                    .collect()
            };
            let (add, remove) = (tuples(), tuples());
            store.update_base(id, &base_map[pred], add, remove).map_err(err)?;
            let snapshot: Vec<Relation> = bases
                .iter()
                .map(|(p, a)| store.db().get(&base_map[p]).cloned().unwrap_or_else(|| Relation::new(p, *a)))
                .collect();
            let binding = bases.iter().zip(&snapshot).fold(Binding::new(), |b, ((p, _), r)| b.bind(p, r));
            let fresh = infer(&rs, &binding, &queries).map_err(err)?;
            for (q, expected) in queries.iter().zip(fresh) {
                let got = store.read_derived(id, q).map_err(err)?;
                ensure(got == &expected, || format!("{mode:?} step {step}: {q} is stale"))?;
            }
        }
    }
    Ok("1000 steps eager, 1000 steps lazy".into())
}

/// Largest residual of a least-squares line through `points`, as a fraction
/// of the range of the y values.
fn residual_fraction(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let max_res = points.iter().map(|p| (p.1 - (my + slope * (p.0 - mx))).abs()).fold(0.0, f64::max);
    let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    max_res / (hi - lo)
}

fn rbac_linear_scaling() -> Outcome {
    let variants = [Variant::NonLocal, Variant::AllLocal, Variant::Union];
    const ROUNDS: usize = 10;
    let full = gen_rbac_workload(&RbacWorkloadConfig::default()).map_err(err)?;
    let workloads: Vec<(usize, _)> = (50..=500).step_by(50).map(|n| (n, full.with_queries(n))).collect();
    for v in variants {
        run_rbac_benchmark(v, &full, 0, 1).map_err(err)?;
    }
    // Rounds are interleaved so that slow stretches of the machine spread
    // over every size instead of skewing one point.
    let mut sums: BTreeMap<(&str, usize), f64> = BTreeMap::new();
    for _ in 0..ROUNDS {
        for (n, workload) in &workloads {
            for v in variants {
                let run = run_rbac_benchmark(v, workload, 0, 1).map_err(err)?;
                let total = run.records.iter().find(|r| r.phase == Phase::Total).unwrap().cpu_seconds_mean;
                *sums.entry((v.name(), *n)).or_default() += total;
            }
        }
    }
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for ((v, n), sum) in sums {
        series.entry(v).or_default().push((n as f64, sum / ROUNDS as f64));
    }
    let fractions: Vec<String> = series
        .iter()
        .map(|(v, pts)| format!("{v} {:.3}", residual_fraction(pts)))
        .collect();
    let summary = format!("max residual / range: {}", fractions.join(", "));
    ensure(series.values().all(|pts| residual_fraction(pts) <= 0.2), || summary.clone())?;
    Ok(summary)
}

fn pa_matches_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..300 {
        let fb = random_fact_base(&mut rng, &SynthShape::default());
        let pa = run_pa(&fb, PaVariant::Pa).map_err(err)?;
        let opt = run_pa(&fb, PaVariant::PaOpt).map_err(err)?;
        ensure(pa == opt, || format!("fact base {i}: pa and paopt differ"))?;
        let o = oracle::oracle(&fb);
        let avg = (!o.defined.is_empty()).then(|| Ratio::new(o.extending.len() as u64, o.defined.len() as u64));
        let checks = [
            ("defined", pa.defined == o.defined && pa.num_defined == o.defined.len()),
            ("extending", pa.extending == o.extending && pa.num_extending == o.extending.len()),
            ("avg_extending", pa.avg_extending == avg),
            ("roots", pa.roots == o.roots),
            ("max_height", Some(pa.max_height) == o.max_height),
            ("roots_max_height", Some(&pa.roots_max_height) == o.roots_max_height.as_ref()),
            ("desc", pa.desc == o.desc),
            ("max_desc", pa.max_desc == o.max_desc),
            ("roots_max_desc", pa.roots_max_desc == o.roots_max_desc),
        ];
        for (field, ok) in checks {
            ensure(ok, || format!("fact base {i}: {field} differs from the oracle"))?;
        }
    }
    Ok("300 fact bases".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("tc_saturation_1000_vertices", tc_saturation),
        ("tc_variants_match_oracle", tc_variants_agree),
        ("tc_cpu_speedups", tc_speedups),
        ("stratified_matches_naive", stratified_matches_naive),
        ("well_founded_semantics", well_founded_suite),
        ("modsg_is_sg_minus_nonsg", modsg_is_difference),
        ("rbac_variants_agree", rbac_variants_agree),
        ("maintained_binding_matches_infer", maintained_binding),
        ("rbac_linear_scaling", rbac_linear_scaling),
        ("pa_matches_oracle", pa_matches_oracle),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
