//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Run with `cargo test --release -p percq-core --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use percq_core::construct::{
    blocker_construct, blocker_feasible, fixed_small_sets, layer_conditions, layer_seed, small_r_set,
    subcube_seed, weight_one_seed, BlockerSpec, LayerMode,
};
use percq_core::cube::{weight_layer, GraphParams, Vertex, VertexSet};
use percq_core::engine::{check_stall_certificate, infected_neighbor_count, Engine};
use percq_core::mc::{find_pc, Backend, PcResult};
use percq_core::oracle::{
    common_neighborhood_empty, pair_condition, r4_counterexample_points, triple_condition, TriangleShape,
};
use percq_core::report::{estimates_csv, EstimateRow};
use percq_core::solver::{min_contagious_exact, SearchBudget};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const PC_TRIALS: u64 = 10_000;
const PC_RATIO_TOL: f64 = 1.05;
const PC_SEED: u64 = 0xC0FFEE;

fn params(n: u32, k: u32, r: u32) -> GraphParams {
    GraphParams::new(n, k, r).expect("valid parameters")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Random sparse sets of 2..=6 points, biased towards close points so both
/// verdicts occur.
fn random_sets(n: u32, k: u32, count: usize, seed: u64) -> Vec<Vec<Vertex>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let size = rng.random_range(2..=6);
            let base: u128 = rng.random::<u128>() & ((1 << n) - 1);
            let mut pts: Vec<Vertex> = (0..size)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        Vertex(rng.random::<u128>() & ((1 << n) - 1))
                    } else {
                        // a point within distance 2k + 2 of the base
                        let mut v = base;
                        for _ in 0..rng.random_range(1..=2 * k + 2) {
                            v ^= 1 << rng.random_range(0..n);
                        }
                        Vertex(v)
                    }
                })
                .collect();
            pts.sort_unstable();
            pts.dedup();
            pts
        })
        .collect()
}

fn engine_percolates(engine: &Engine, pts: &[Vertex]) -> bool {
    let set = VertexSet::from_vertices(engine.params().n, pts.iter().copied()).expect("in range");
    engine.closure_owned(set).expect("dense").percolated
}

fn criterion_1() -> Outcome {
    let mut checked = 0usize;
    for k in [2, 3] {
        for n in 6..=11 {
            let engine = Engine::new(params(n, k, 2)).map_err(|e| e.to_string())?;
            let pairs: Vec<Vec<Vertex>> = (1..1u128 << n).map(|x| vec![Vertex::ZERO, Vertex(x)]).collect();
            let sets = random_sets(n, k, 10_000, 1000 + n as u64 * 10 + k as u64);
            let bad = pairs
                .par_iter()
                .chain(sets.par_iter())
                .find_first(|pts| engine_percolates(&engine, pts) != pair_condition(pts, k));
            if let Some(pts) = bad {
                return Err(format!("disagreement at n={n} k={k}: {pts:?}"));
            }
            checked += pairs.len() + sets.len();
        }
    }
    Ok(format!("{checked} sets, 100% agreement"))
}

fn criterion_2() -> Outcome {
    let mut checked = 0usize;
    for k in [2, 3] {
        for n in 6..=11 {
            let engine = Engine::new(params(n, k, 3)).map_err(|e| e.to_string())?;
            let mut sets = random_sets(n, k, 10_000, 2000 + n as u64 * 10 + k as u64);
            if n <= 9 {
                // x is canonical up to coordinate permutation; y ranges freely
                let radius = 2 * k + 2;
                for a in 1..=radius.min(n) {
                    let x = Vertex::run(0, a);
                    for y in 1..1u128 << n {
                        let y = Vertex(y);
                        if y != x && y.weight() <= radius {
                            let mut pts = vec![Vertex::ZERO, x, y];
                            pts.sort_unstable();
                            sets.push(pts);
                        }
                    }
                }
            }
            let bad = sets.par_iter().find_first(|pts| {
                engine_percolates(&engine, pts) != triple_condition(pts, k).expect("k >= 2")
            });
            if let Some(pts) = bad {
                return Err(format!("disagreement at n={n} k={k}: {pts:?}"));
            }
            checked += sets.len();
        }
    }
    let shapes = TriangleShape::all(4);
    ensure(shapes.len() == 9, || format!("expected 9 triangle shapes, got {}", shapes.len()))?;
    for shape in &shapes {
        for n in shape.min_dimension().max(6)..=11 {
            let engine = Engine::new(params(n, 2, 3)).map_err(|e| e.to_string())?;
            ensure(engine_percolates(&engine, &shape.realize()), || {
                format!("triangle {shape:?} does not percolate at n={n}")
            })?;
        }
    }
    Ok(format!("{checked} sets, 100% agreement; 9/9 triangle shapes percolate"))
}

fn criterion_3() -> Outcome {
    let mut instances = 0;
    for (k, r) in [(2, 4), (2, 5), (2, 6), (3, 4)] {
        for n in r * k..=14 {
            let p = params(n, k, r);
            let pts = r4_counterexample_points(&p).map_err(|e| e.to_string())?;
            let a0 = VertexSet::from_vertices(n, pts.iter().copied()).map_err(|e| e.to_string())?;
            let res = Engine::new(p).and_then(|e| e.closure(&a0)).map_err(|e| e.to_string())?;
            ensure(res.final_set == a0, || format!("n={n} k={k} r={r}: closure grew"))?;
            let empty = common_neighborhood_empty(&pts, &p).map_err(|e| e.to_string())?;
            ensure(empty, || format!("n={n} k={k} r={r}: common neighbourhood non-empty"))?;
            instances += 1;
        }
    }
    Ok(format!("{instances} instances stall with empty common neighbourhood"))
}

fn check_percolates(label: &str, p: GraphParams, seed: VertexSet) -> Result<(), String> {
    let ok = Engine::new(p).and_then(|e| e.percolates(&seed)).map_err(|e| e.to_string())?;
    ensure(ok, || format!("{label} fails to percolate at n={} k={} r={}", p.n, p.k, p.r))
}

fn criterion_4() -> Outcome {
    let mut count = 0;
    let mut run = |label: &str, p: GraphParams, seed: Result<VertexSet, percq_core::Error>| {
        count += 1;
        check_percolates(label, p, seed.map_err(|e| e.to_string())?)
    };
    for k in [2, 3] {
        for r in 1..=7 {
            for n in (r - 1).max(k).max(1)..=14 {
                let p = params(n, k, r);
                run("subcube_seed", p, subcube_seed(&p))?;
            }
        }
    }
    for k in 2..=5 {
        for r in 2..=2 * k {
            for n in r.max(k)..=14 {
                let p = params(n, k, r);
                run("small_r_set", p, small_r_set(&p))?;
            }
        }
    }
    for r in [5, 6] {
        for n in 8..=14 {
            run("fixed_small_sets", params(n, 2, r), fixed_small_sets(r, n))?;
        }
    }
    let mut layer_instances = Vec::new();
    for r in 10..=12 {
        for n in r - 1..=14 {
            layer_instances.push((params(n, 2, r), LayerMode::Subcube));
        }
    }
    for n in [12, 13] {
        for r in n..=n + 6 {
            layer_instances.push((params(n, 2, r), LayerMode::Fullcube));
        }
    }
    layer_instances.push((params(15, 3, 15), LayerMode::Fullcube));
    for &(p, mode) in &layer_instances {
        run("layer_seed", p, layer_seed(&p, mode))?;
    }
    for r in 1..=14 {
        for n in r.max(3)..=14 {
            let p = params(n, 3, r);
            run("weight_one_seed", p, weight_one_seed(&p))?;
        }
    }

    // layer_conditions => percolation, on the instances above and a wider grid
    let mut grid = layer_instances.clone();
    for k in [2, 3] {
        for n in 8..=14 {
            for r in 2..=n + 6 {
                for mode in [LayerMode::Subcube, LayerMode::Fullcube] {
                    grid.push((params(n, k, r), mode));
                }
            }
        }
    }
    let mut implied = 0;
    for (p, mode) in grid {
        if !layer_conditions(&p, mode) {
            continue;
        }
        let seed = layer_seed(&p, mode).map_err(|e| e.to_string())?;
        let ok = Engine::new(p).and_then(|e| e.percolates(&seed)).map_err(|e| e.to_string())?;
        ensure(ok, || {
            format!("layer_conditions holds but {mode:?} layer seed stalls at n={} k={} r={}", p.n, p.k, p.r)
        })?;
        implied += 1;
    }
    Ok(format!("{count} constructions percolate; layer_conditions => percolation on {implied} instances"))
}

fn layer_count_range(v: &VertexSet, layer: &VertexSet, p: &GraphParams) -> Result<(usize, usize), String> {
    let counts: Vec<usize> = v
        .iter()
        .map(|x| infected_neighbor_count(x, layer, p))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok((*counts.iter().min().unwrap(), *counts.iter().max().unwrap()))
}

fn criterion_5() -> Outcome {
    for n in 10..=14 {
        let p = params(n, 2, 16);
        let layers: Vec<VertexSet> = (0..=6).map(|j| weight_layer(n, j)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        let mut seed = VertexSet::empty(n).map_err(|e| e.to_string())?;
        for layer in &layers[..=4] {
            seed = seed.union(layer);
        }
        let res = Engine::new(p).and_then(|e| e.closure(&seed)).map_err(|e| e.to_string())?;
        ensure(res.final_set == seed, || format!("n={n}: closure of V_0..V_4 grew"))?;
        for (from, to, want) in [(5, 4, 5), (5, 3, 10), (6, 4, 15)] {
            let got = layer_count_range(&layers[from], &layers[to], &p)?;
            ensure(got == (want, want), || {
                format!("n={n}: |N_v ∩ V_{to}| for v in V_{from} ranges over {got:?}, want {want}")
            })?;
        }
    }
    Ok("V_0..V_4 stalls for n=10..14; neighbour counts 5, 10, 15".into())
}

fn criterion_6() -> Outcome {
    let p = params(8, 2, 16);
    let spec = BlockerSpec::with_default_patterns(2, 3.0 / 16.0, 1.0).map_err(|e| e.to_string())?;
    ensure(blocker_feasible(8, &spec, 2, 16).map_err(|e| e.to_string())?, || "infeasible".into())?;
    let (a0, b) = blocker_construct(&spec, &p).map_err(|e| e.to_string())?;
    ensure(check_stall_certificate(&b, &p).map_err(|e| e.to_string())?, || "certificate fails".into())?;
    let res = Engine::new(p).and_then(|e| e.closure(&a0)).map_err(|e| e.to_string())?;
    ensure(res.final_set == a0, || "closure(A0) grew".into())?;
    Ok(format!("|A0|={} |B|={}, certificate holds, closure stalls", a0.len(), b.len()))
}

fn criterion_7() -> Outcome {
    let mut cases = Vec::new();
    for r in 2..=6 {
        for n in r.max(5)..=8 {
            cases.push(params(n, 2, r));
        }
    }
    for r in 2..=4 {
        for n in 5..=8 {
            cases.push(params(n, 3, r));
        }
    }
    let mut nodes = 0;
    for p in &cases {
        let res = min_contagious_exact(p, p.r, SearchBudget::default()).map_err(|e| e.to_string())?;
        ensure(res.m == Some(p.r), || {
            format!("n={} k={} r={}: m={:?}, exhausted to {}", p.n, p.k, p.r, res.m, res.exhausted_to)
        })?;
        nodes += res.nodes_searched;
    }
    Ok(format!("m = r on {} instances ({nodes} nodes)", cases.len()))
}

/// Every `find_pc` run of criteria 8 and 9, in a fixed order.
fn pc_runs() -> Vec<(GraphParams, Backend)> {
    let mut runs = Vec::new();
    for n in [12, 14, 16, 18] {
        if n <= 14 {
            runs.push((params(n, 2, 2), Backend::Engine));
        }
        runs.push((params(n, 2, 2), Backend::Oracle));
    }
    for n in [12, 14] {
        runs.push((params(n, 2, 3), Backend::Engine));
        runs.push((params(n, 2, 3), Backend::Oracle));
    }
    runs
}

/// Results plus the CSV of every evaluation performed.
fn pc_suite() -> Result<(Vec<PcResult>, String), String> {
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for (p, backend) in pc_runs() {
        let res = find_pc(&p, PC_TRIALS, PC_SEED, backend, PC_RATIO_TOL).map_err(|e| e.to_string())?;
        rows.extend(res.history.iter().map(|&estimate| EstimateRow { params: p, backend, seed: PC_SEED, estimate }));
        results.push(res);
    }
    let csv = estimates_csv(&rows).map_err(|e| e.to_string())?;
    Ok((results, csv))
}

fn normalized(res: &PcResult) -> f64 {
    res.p_hat * 2f64.powf(res.n as f64 / res.r as f64) * (res.n as f64).powi(res.k as i32)
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

fn criterion_8(results: &[PcResult]) -> Outcome {
    let mut summary = Vec::new();
    for res in results {
        let z = normalized(res);
        summary.push(format!("r={} n={} {}: {z:.3}", res.r, res.n, res.backend.as_str()));
        ensure((0.05..=20.0).contains(&z), || {
            format!("r={} n={} {}: normalised p_hat {z} outside [0.05, 20]", res.r, res.n, res.backend.as_str())
        })?;
    }
    let oracle_r2: Vec<&PcResult> = results.iter().filter(|r| r.r == 2 && r.backend == Backend::Oracle).collect();
    let raw: Vec<f64> = oracle_r2.iter().map(|r| r.p_hat).collect();
    let norm: Vec<f64> = oracle_r2.iter().map(|r| normalized(r)).collect();
    let (raw_spread, norm_spread) = (spread(&raw), spread(&norm));
    ensure(norm_spread < raw_spread, || {
        format!("normalised spread {norm_spread:.3} not below raw spread {raw_spread:.3}")
    })?;
    Ok(format!(
        "{}; r=2 spread raw {raw_spread:.2} vs normalised {norm_spread:.2}",
        summary.join(", ")
    ))
}

fn criterion_9(results: &[PcResult]) -> Outcome {
    let mut notes = Vec::new();
    for r in [2, 3] {
        let find = |b: Backend| {
            results
                .iter()
                .find(|x| x.n == 12 && x.r == r && x.backend == b)
                .ok_or_else(|| format!("missing n=12 r={r} {} run", b.as_str()))
        };
        let ratio = find(Backend::Engine)?.p_hat / find(Backend::Oracle)?.p_hat;
        ensure((0.8..=1.25).contains(&ratio), || format!("r={r}: engine/oracle ratio {ratio:.4}"))?;
        notes.push(format!("r={r} ratio {ratio:.4}"));
    }
    Ok(notes.join(", "))
}

fn criterion_10(reference_csv: &str) -> Outcome {
    for threads in [2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        let (_, csv) = pool.install(pc_suite)?;
        ensure(csv == reference_csv, || format!("CSV differs under {threads} threads"))?;
    }
    Ok(format!("{} bytes identical under 1, 2 and 8 threads", reference_csv.len()))
}

fn report(id: usize, name: &str, started: Instant, outcome: &Outcome) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} [{secs:.1}s]"),
        Err(why) => println!("FAIL criterion {id:>2} {name}: {why} [{secs:.1}s]"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let mut all_ok = true;
    let simple: [Criterion; 7] = [
        ("oracle equivalence r=2", criterion_1),
        ("oracle equivalence r=3", criterion_2),
        ("r>=4 counterexample", criterion_3),
        ("constructions percolate", criterion_4),
        ("m(16) > 16 stall witness", criterion_5),
        ("blocker", criterion_6),
        ("exact solver", criterion_7),
    ];
    for (i, (name, check)) in simple.into_iter().enumerate() {
        let started = Instant::now();
        all_ok &= report(i + 1, name, started, &check());
    }

    let started = Instant::now();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    match single.install(pc_suite) {
        Ok((results, csv)) => {
            all_ok &= report(8, "critical probability scaling", started, &criterion_8(&results));
            all_ok &= report(9, "backend cross-validation", started, &criterion_9(&results));
            let started = Instant::now();
            all_ok &= report(10, "determinism", started, &criterion_10(&csv));
        }
        Err(why) => {
            for (id, name) in [(8, "critical probability scaling"), (9, "backend cross-validation"), (10, "determinism")] {
                all_ok &= report(id, name, started, &Err(why.clone()));
            }
        }
    }

    if all_ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
