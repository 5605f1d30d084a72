//! Self-check suites run by `percq verify`.

use clap::ValueEnum;
use percq_core::construct::{
    blocker_construct, blocker_feasible, fixed_small_sets, layer_conditions, layer_seed, small_r_set,
    subcube_seed, weight_one_seed, BlockerSpec, LayerMode,
};
use percq_core::cube::{weight_layer, GraphParams, Vertex, VertexSet};
use percq_core::engine::{check_stall_certificate, infected_neighbor_count, Engine};
use percq_core::oracle::{
    common_neighborhood_empty, pair_condition, r4_counterexample_points, triple_condition, TriangleShape,
};
use percq_core::{Error, Result, Seed};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    OracleR2,
    OracleR3,
    Constructions,
    CounterexampleR4,
    Blocker,
    M16Stall,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::OracleR2 => "oracle-r2",
            Suite::OracleR3 => "oracle-r3",
            Suite::Constructions => "constructions",
            Suite::CounterexampleR4 => "counterexample-r4",
            Suite::Blocker => "blocker",
            Suite::M16Stall => "m16-stall",
        }
    }
}

/// One checked `(n, k, r)` instance group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub n: u32,
    pub k: u32,
    pub r: u32,
    pub checked: u64,
    pub failures: u64,
    /// First failing instance, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

pub const CHECK_COLUMNS: [&str; 7] = ["suite", "n", "k", "r", "checked", "failures", "example"];

impl Check {
    pub fn fields(&self) -> Vec<String> {
        vec![
            self.suite.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.r.to_string(),
            self.checked.to_string(),
            self.failures.to_string(),
            self.example.clone().unwrap_or_default(),
        ]
    }
}

pub struct VerifyOptions {
    pub n_max: u32,
    pub k: u32,
    pub random_sets: u64,
    pub seed: u64,
}

fn describe(points: &[Vertex], n: u32) -> String {
    points.iter().map(|v| v.to_bit_string(n)).collect::<Vec<_>>().join(" ")
}

/// Runs `instances` through `bad` and tallies the failures.
fn tally(suite: Suite, p: GraphParams, instances: &[Vec<Vertex>], bad: impl Fn(&[Vertex]) -> bool + Sync) -> Check {
    let failing: Vec<&Vec<Vertex>> = instances.par_iter().filter(|pts| bad(pts)).collect();
    Check {
        suite: suite.name(),
        n: p.n,
        k: p.k,
        r: p.r,
        checked: instances.len() as u64,
        failures: failing.len() as u64,
        example: failing.first().map(|pts| describe(pts, p.n)),
    }
}

fn single(suite: Suite, p: GraphParams, ok: bool, what: impl FnOnce() -> String) -> Check {
    Check {
        suite: suite.name(),
        n: p.n,
        k: p.k,
        r: p.r,
        checked: 1,
        failures: u64::from(!ok),
        example: (!ok).then(what),
    }
}

fn random_sets(n: u32, count: u64, seed: u64) -> Result<Vec<Vec<Vertex>>> {
    // about four points per set
    let p = (4.0 / (1u64 << n) as f64).min(1.0);
    (0..count)
        .map(|t| percq_core::mc::sample_points(n, p, Seed::new(seed).for_trial(t)).map(|s| s.points))
        .collect()
}

fn percolates(engine: &Engine, pts: &[Vertex]) -> bool {
    let set = VertexSet::from_vertices(engine.params().n, pts.iter().copied()).expect("points fit");
    engine.closure_owned(set).expect("dense").percolated
}

fn oracle_r2(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in opts.k.max(2)..=opts.n_max {
        let p = GraphParams::new(n, opts.k, 2)?;
        let engine = Engine::new(p)?;
        let mut sets: Vec<Vec<Vertex>> = (1..1u128 << n).map(|x| vec![Vertex::ZERO, Vertex(x)]).collect();
        sets.extend(random_sets(n, opts.random_sets, opts.seed)?);
        out.push(tally(Suite::OracleR2, p, &sets, |pts| percolates(&engine, pts) != pair_condition(pts, opts.k)));
    }
    Ok(out)
}

fn oracle_r3(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = opts.k;
    for n in k.max(3)..=opts.n_max {
        let p = GraphParams::new(n, k, 3)?;
        let engine = Engine::new(p)?;
        let mut sets = random_sets(n, opts.random_sets, opts.seed)?;
        let radius = 2 * k + 2;
        for a in 1..=radius.min(n) {
            let x = Vertex::run(0, a);
            for y in (1..1u128 << n).map(Vertex) {
                if y != x && y.weight() <= radius {
                    sets.push(vec![Vertex::ZERO, x, y]);
                }
            }
        }
        out.push(tally(Suite::OracleR3, p, &sets, |pts| {
            percolates(&engine, pts) != triple_condition(pts, k).expect("k >= 2 checked")
        }));
    }
    if k == 2 {
        for n in 6..=opts.n_max {
            let p = GraphParams::new(n, 2, 3)?;
            let engine = Engine::new(p)?;
            let shapes: Vec<Vec<Vertex>> = TriangleShape::all(4)
                .into_iter()
                .filter(|s| s.min_dimension() <= n)
                .map(|s| s.realize().to_vec())
                .collect();
            out.push(tally(Suite::OracleR3, p, &shapes, |pts| !percolates(&engine, pts)));
        }
    }
    Ok(out)
}

fn construction_check(p: GraphParams, name: &str, seed: Result<VertexSet>) -> Result<Check> {
    let seed = seed?;
    let ok = Engine::new(p)?.percolates(&seed)?;
    Ok(single(Suite::Constructions, p, ok, || format!("{name} stalls")))
}

fn constructions(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = opts.k;
    for n in k..=opts.n_max {
        for r in 1..=(n + 1).min(7) {
            let p = GraphParams::new(n, k, r)?;
            out.push(construction_check(p, "subcube", subcube_seed(&p))?);
        }
        for r in 2..=(2 * k).min(n) {
            let p = GraphParams::new(n, k, r)?;
            out.push(construction_check(p, "small-r", small_r_set(&p))?);
        }
        for r in 2..=n + 6 {
            let p = GraphParams::new(n, k, r)?;
            for mode in [LayerMode::Subcube, LayerMode::Fullcube] {
                if layer_conditions(&p, mode) {
                    out.push(construction_check(p, "layer", layer_seed(&p, mode))?);
                }
            }
        }
        if k == 2 && n >= 8 {
            for r in [5, 6] {
                out.push(construction_check(GraphParams::new(n, 2, r)?, "fixed", fixed_small_sets(r, n))?);
            }
        }
        if k >= 3 {
            for r in 1..=n {
                let p = GraphParams::new(n, k, r)?;
                out.push(construction_check(p, "weight1", weight_one_seed(&p))?);
            }
        }
    }
    Ok(out)
}

fn counterexample_r4(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let k = opts.k;
    for r in 4.. {
        if r * k > opts.n_max {
            break;
        }
        for n in r * k..=opts.n_max {
            let p = GraphParams::new(n, k, r)?;
            let pts = r4_counterexample_points(&p)?;
            let a0 = VertexSet::from_vertices(n, pts.iter().copied())?;
            let stalls = Engine::new(p)?.closure(&a0)?.final_set == a0;
            let empty = common_neighborhood_empty(&pts, &p)?;
            out.push(single(Suite::CounterexampleR4, p, stalls && empty, || {
                format!("stalls={stalls} common_neighbourhood_empty={empty}")
            }));
        }
    }
    Ok(out)
}

fn blocker(_opts: &VerifyOptions) -> Result<Vec<Check>> {
    let p = GraphParams::new(8, 2, 16)?;
    let spec = BlockerSpec::with_default_patterns(2, 3.0 / 16.0, 1.0)?;
    let feasible = blocker_feasible(8, &spec, 2, 16)?;
    let (a0, b) = blocker_construct(&spec, &p)?;
    let certified = check_stall_certificate(&b, &p)?;
    let stalls = Engine::new(p)?.closure(&a0)?.final_set == a0;
    Ok(vec![single(Suite::Blocker, p, feasible && certified && stalls, || {
        format!("feasible={feasible} certified={certified} stalls={stalls}")
    })])
}

fn m16_stall(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for n in 10..=opts.n_max {
        let p = GraphParams::new(n, 2, 16)?;
        let layers: Vec<VertexSet> = (0..=6).map(|j| weight_layer(n, j)).collect::<Result<_>>()?;
        let mut seed = VertexSet::empty(n)?;
        for layer in &layers[..=4] {
            seed = seed.union(layer);
        }
        let stalls = Engine::new(p)?.closure(&seed)?.final_set == seed;
        let mut counts_ok = true;
        for (from, to, want) in [(5, 4, 5), (5, 3, 10), (6, 4, 15)] {
            for v in layers[from].iter() {
                counts_ok &= infected_neighbor_count(v, &layers[to], &p)? == want;
            }
        }
        out.push(single(Suite::M16Stall, p, stalls && counts_ok, || {
            format!("stalls={stalls} counts_ok={counts_ok}")
        }));
    }
    Ok(out)
}

pub fn run(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    if opts.k < 2 && matches!(suite, Suite::OracleR3 | Suite::Constructions) {
        return Err(Error::Parameter(format!("suite {} needs k >= 2", suite.name())));
    }
    match suite {
        Suite::OracleR2 => oracle_r2(opts),
        Suite::OracleR3 => oracle_r3(opts),
        Suite::Constructions => constructions(opts),
        Suite::CounterexampleR4 => counterexample_r4(opts),
        Suite::Blocker => blocker(opts),
        Suite::M16Stall => m16_stall(opts),
    }
}
