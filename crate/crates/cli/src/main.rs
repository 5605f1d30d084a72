//! `percq`: bootstrap percolation on distance-k augmented hypercubes.

mod output;
mod verify;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use percq_core::construct::{
    blocker_construct, blocker_feasible, fixed_small_sets, layer_conditions, layer_seed, small_r_set,
    subcube_seed, weight_one_seed, BlockerSpec, LayerMode,
};
use percq_core::cube::{GraphParams, Vertex, VertexSet};
use percq_core::engine::{check_stall_certificate, Engine};
use percq_core::mc::{find_pc, log_grid, sample_initial, Backend, Seed, TrialRunner};
use percq_core::oracle::oracle_verdict;
use percq_core::report::{estimates_csv, float17, float17_opt, fmt_float, EstimateRow, ESTIMATE_COLUMNS};
use percq_core::solver::{min_contagious_exact, SearchBudget};
use percq_core::{Estimate, DEFAULT_SEED};
use serde::Serialize;

use crate::output::{emit, render, Format, Table};
use crate::verify::{Suite, VerifyOptions, CHECK_COLUMNS};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters (exit 2).
    Usage(String),
    /// A verification did not hold (exit 1).
    Failed(String),
    /// Output could not be written (exit 1).
    Io(String),
}

impl From<percq_core::Error> for CliError {
    fn from(e: percq_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "percq", version, about = "r-neighbour bootstrap percolation on Q_{n,k}")]
struct Cli {
    /// Worker threads for parallel trials.
    #[arg(long, global = true, env = "PERCQ_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct CubeArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    r: u32,
}

impl CubeArgs {
    fn params(self) -> CliResult<GraphParams> {
        Ok(GraphParams::new(self.n, self.k, self.r)?)
    }
}

#[derive(Args)]
struct SetArgs {
    /// Comma-separated vertices: binary strings (coordinate 0 first) or 0x labels.
    #[arg(long, value_delimiter = ',')]
    set: Vec<String>,
    /// File with one vertex per line; blank lines and `#` comments are skipped.
    #[arg(long)]
    set_file: Option<PathBuf>,
}

impl SetArgs {
    fn given(&self) -> bool {
        !self.set.is_empty() || self.set_file.is_some()
    }

    fn points(&self, n: u32) -> CliResult<Vec<Vertex>> {
        let mut texts: Vec<String> = self.set.clone();
        if let Some(path) = &self.set_file {
            let body = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            texts.extend(
                body.lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from),
            );
        }
        let mut points = texts
            .iter()
            .map(|t| Vertex::parse(t, n))
            .collect::<percq_core::Result<Vec<_>>>()?;
        points.sort_unstable();
        points.dedup();
        Ok(points)
    }
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_u64(text: &str) -> Result<u64, String> {
    match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).map_err(|e| e.to_string()),
        None => text.parse().map_err(|e: std::num::ParseIntError| e.to_string()),
    }
}

fn parse_backend(text: &str) -> Result<Backend, String> {
    text.parse().map_err(|e: percq_core::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Construction {
    Subcube,
    SmallR,
    Fixed,
    Layer,
    LayerSubcube,
    LayerFullcube,
    Weight1,
    Blocker,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the process from a given or sampled initial set.
    Simulate {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        set: SetArgs,
        /// Sample the initial set with density p instead of --set.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_u64)]
        seed: u64,
        /// Include the final infected set in the output.
        #[arg(long)]
        full_set: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Compares the closed-form predicate with the engine on one set.
    OracleCheck {
        #[command(flatten)]
        cube: CubeArgs,
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimates the critical probability by bracketing and bisection.
    Pc {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_u64)]
        seed: u64,
        #[arg(long, default_value = "engine", value_parser = parse_backend)]
        backend: Backend,
        /// Stop once p_high / p_low is at most this.
        #[arg(long, default_value_t = 1.05)]
        ratio_tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimates percolation probability over a grid of p.
    Sweep {
        #[command(flatten)]
        cube: CubeArgs,
        /// Comma-separated probabilities.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// Log-spaced grid `low:high:count`.
        #[arg(long)]
        p_grid: Option<String>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_u64)]
        seed: u64,
        #[arg(long, default_value = "engine", value_parser = parse_backend)]
        backend: Backend,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Builds an explicit seed set and runs it.
    Construct {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long, value_enum)]
        construction: Construction,
        /// Layer mode for `--construction layer`.
        #[arg(long, default_value = "subcube")]
        mode: LayerMode,
        /// Blocker: number of leading coordinates carrying the pattern.
        #[arg(long, default_value_t = 2)]
        n_prime: u32,
        /// Blocker: fraction c.
        #[arg(long, default_value_t = 3.0 / 16.0)]
        c: f64,
        /// Blocker: exponent ell.
        #[arg(long, default_value_t = 1.0)]
        ell: f64,
        /// Include the seed and final sets in the output.
        #[arg(long)]
        full_set: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact minimum contagious set size for small n.
    Minset {
        #[command(flatten)]
        cube: CubeArgs,
        #[arg(long)]
        m_max: u32,
        #[arg(long, default_value_t = SearchBudget::default().max_nodes)]
        max_nodes: u64,
        #[arg(long)]
        max_seconds: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Runs a self-check suite; exits 1 on any failure.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        n_max: u32,
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Random sets per dimension for the oracle suites.
        #[arg(long, default_value_t = 1000)]
        random_sets: u64,
        #[arg(long, default_value_t = DEFAULT_SEED, value_parser = parse_u64)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Serialize)]
struct SimulateRecord {
    n: u32,
    k: u32,
    r: u32,
    #[serde(serialize_with = "float17_opt", skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    initial_count: usize,
    percolated: bool,
    generations: usize,
    growth: Vec<usize>,
    final_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_set: Option<Vec<String>>,
}

const SIMULATE_COLUMNS: [&str; 10] = [
    "n", "k", "r", "p", "seed", "initial_count", "percolated", "generations", "growth", "final_count",
];

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn bits(set: &VertexSet) -> Vec<String> {
    set.iter().map(|v| v.to_bit_string(set.n())).collect()
}

fn simulate(cube: CubeArgs, set: &SetArgs, p: Option<f64>, seed: u64, full_set: bool, out: &OutArgs) -> CliResult<()> {
    let params = cube.params()?;
    let (a0, seed) = match (p, set.given()) {
        (Some(_), true) => return Err(CliError::Usage("give either --set/--set-file or --p, not both".into())),
        (None, false) => return Err(CliError::Usage("simulate needs --set, --set-file or --p".into())),
        (None, true) => {
            let points = set.points(params.n)?;
            params.check_dense()?;
            (VertexSet::from_vertices(params.n, points)?, None)
        }
        (Some(p), false) => (sample_initial(&params, p, Seed::new(seed))?, Some(seed)),
    };
    let res = Engine::new(params)?.closure(&a0)?;
    let record = SimulateRecord {
        n: params.n,
        k: params.k,
        r: params.r,
        p,
        seed,
        initial_count: a0.len(),
        percolated: res.percolated,
        generations: res.generations,
        growth: res.growth.clone(),
        final_count: res.final_set.len(),
        final_set: full_set.then(|| bits(&res.final_set)),
    };
    let row = vec![
        params.n.to_string(),
        params.k.to_string(),
        params.r.to_string(),
        p.map(fmt_float).unwrap_or_default(),
        seed.map(|s| s.to_string()).unwrap_or_default(),
        a0.len().to_string(),
        res.percolated.to_string(),
        res.generations.to_string(),
        join(&res.growth),
        res.final_set.len().to_string(),
    ];
    let table = Table { header: &SIMULATE_COLUMNS, rows: vec![row], json: &record };
    emit(&render(&table, out.format.unwrap_or(Format::Json))?, out.out.as_deref())
}

#[derive(Serialize)]
struct OracleCheckRecord {
    n: u32,
    k: u32,
    r: u32,
    size: usize,
    oracle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    engine: Option<bool>,
    agree: bool,
}

fn oracle_check(cube: CubeArgs, set: &SetArgs, out: &OutArgs) -> CliResult<()> {
    let params = cube.params()?;
    if !set.given() {
        return Err(CliError::Usage("oracle-check needs --set or --set-file".into()));
    }
    let points = set.points(params.n)?;
    let oracle = oracle_verdict(&points, &params)?;
    let engine = if params.check_dense().is_ok() {
        let a0 = VertexSet::from_vertices(params.n, points.iter().copied())?;
        Some(Engine::new(params)?.percolates(&a0)?)
    } else {
        None
    };
    let agree = engine.is_none_or(|e| e == oracle);
    let record = OracleCheckRecord { n: params.n, k: params.k, r: params.r, size: points.len(), oracle, engine, agree };
    let row = vec![
        params.n.to_string(),
        params.k.to_string(),
        params.r.to_string(),
        points.len().to_string(),
        oracle.to_string(),
        engine.map(|e| e.to_string()).unwrap_or_default(),
        agree.to_string(),
    ];
    let header = ["n", "k", "r", "size", "oracle", "engine", "agree"];
    let table = Table { header: &header, rows: vec![row], json: &record };
    emit(&render(&table, out.format.unwrap_or(Format::Json))?, out.out.as_deref())?;
    if agree {
        Ok(())
    } else {
        Err(CliError::Failed("engine and oracle disagree".into()))
    }
}

fn pc(cube: CubeArgs, trials: u64, seed: u64, backend: Backend, ratio_tol: f64, out: &OutArgs) -> CliResult<()> {
    let params = cube.params()?;
    let res = find_pc(&params, trials, seed, backend, ratio_tol)?;
    let header = [
        "n", "k", "r", "backend", "p_low", "p_high", "p_hat", "trials_per_eval", "evals", "seed",
    ];
    let row = vec![
        res.n.to_string(),
        res.k.to_string(),
        res.r.to_string(),
        res.backend.as_str().to_string(),
        fmt_float(res.p_low),
        fmt_float(res.p_high),
        fmt_float(res.p_hat),
        res.trials_per_eval.to_string(),
        res.evals.to_string(),
        res.seed.to_string(),
    ];
    let table = Table { header: &header, rows: vec![row], json: &res };
    emit(&render(&table, out.format.unwrap_or(Format::Json))?, out.out.as_deref())
}

#[derive(Serialize)]
struct SweepRecord {
    n: u32,
    k: u32,
    r: u32,
    backend: Backend,
    #[serde(serialize_with = "float17")]
    p: f64,
    trials: u64,
    successes: u64,
    #[serde(serialize_with = "float17")]
    point: f64,
    #[serde(serialize_with = "float17")]
    ci_low: f64,
    #[serde(serialize_with = "float17")]
    ci_high: f64,
    seed: u64,
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("--p-grid expects low:high:count, got {text:?}"));
    let [low, high, count] = parts.as_slice() else {
        return Err(bad());
    };
    let low: f64 = low.parse().map_err(|_| bad())?;
    let high: f64 = high.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    Ok(log_grid(low, high, count)?)
}

fn sweep(
    cube: CubeArgs,
    ps: &[f64],
    grid: Option<&str>,
    trials: u64,
    seed: u64,
    backend: Backend,
    out: &OutArgs,
) -> CliResult<()> {
    let params = cube.params()?;
    let mut grid_points = ps.to_vec();
    if let Some(g) = grid {
        grid_points.extend(parse_grid(g)?);
    }
    if grid_points.is_empty() {
        return Err(CliError::Usage("sweep needs --p or --p-grid".into()));
    }
    let runner = TrialRunner::new(params, backend)?;
    let estimates: Vec<Estimate> = grid_points
        .iter()
        .map(|&p| runner.estimate(p, trials, Seed::new(seed)))
        .collect::<percq_core::Result<_>>()?;
    let rows: Vec<EstimateRow> = estimates
        .iter()
        .map(|&estimate| EstimateRow { params, backend, seed, estimate })
        .collect();
    let bytes = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => estimates_csv(&rows)?.into_bytes(),
        Format::Json => {
            let records: Vec<SweepRecord> = rows
                .iter()
                .map(|row| SweepRecord {
                    n: params.n,
                    k: params.k,
                    r: params.r,
                    backend,
                    p: row.estimate.p,
                    trials: row.estimate.trials,
                    successes: row.estimate.successes,
                    point: row.estimate.point,
                    ci_low: row.estimate.ci_low,
                    ci_high: row.estimate.ci_high,
                    seed,
                })
                .collect();
            let table = Table { header: &ESTIMATE_COLUMNS, rows: Vec::new(), json: &records };
            render(&table, Format::Json)?
        }
    };
    emit(&bytes, out.out.as_deref())
}

#[derive(Serialize)]
struct ConstructRecord {
    construction: &'static str,
    n: u32,
    k: u32,
    r: u32,
    seed_size: usize,
    percolated: bool,
    generations: usize,
    final_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    layer_conditions: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blocker: Option<BlockerRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_set: Option<Vec<String>>,
}

#[derive(Serialize)]
struct BlockerRecord {
    spec: BlockerSpec,
    feasible: bool,
    blocker_size: usize,
    certificate: bool,
}

impl Construction {
    fn name(self) -> &'static str {
        match self {
            Construction::Subcube => "subcube",
            Construction::SmallR => "small-r",
            Construction::Fixed => "fixed",
            Construction::Layer => "layer",
            Construction::LayerSubcube => "layer-subcube",
            Construction::LayerFullcube => "layer-fullcube",
            Construction::Weight1 => "weight1",
            Construction::Blocker => "blocker",
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn construct(
    cube: CubeArgs,
    which: Construction,
    mode: LayerMode,
    n_prime: u32,
    c: f64,
    ell: f64,
    full_set: bool,
    out: &OutArgs,
) -> CliResult<()> {
    let params = cube.params()?;
    params.check_dense()?;
    let layer_mode = match which {
        Construction::Layer => Some(mode),
        Construction::LayerSubcube => Some(LayerMode::Subcube),
        Construction::LayerFullcube => Some(LayerMode::Fullcube),
        _ => None,
    };
    let mut blocker = None;
    let a0 = match which {
        Construction::Subcube => subcube_seed(&params)?,
        Construction::SmallR => small_r_set(&params)?,
        Construction::Fixed => {
            if params.k != 2 {
                return Err(CliError::Usage("fixed sets are built for k = 2".into()));
            }
            fixed_small_sets(params.r, params.n)?
        }
        Construction::Layer | Construction::LayerSubcube | Construction::LayerFullcube => {
            layer_seed(&params, layer_mode.expect("layer construction"))?
        }
        Construction::Weight1 => weight_one_seed(&params)?,
        Construction::Blocker => {
            let spec = BlockerSpec::with_default_patterns(n_prime, c, ell)?;
            let feasible = blocker_feasible(params.n, &spec, params.k, params.r)?;
            let (a0, b) = blocker_construct(&spec, &params)?;
            let certificate = check_stall_certificate(&b, &params)?;
            blocker = Some(BlockerRecord { spec, feasible, blocker_size: b.len(), certificate });
            a0
        }
    };
    let res = Engine::new(params)?.closure(&a0)?;
    let record = ConstructRecord {
        construction: which.name(),
        n: params.n,
        k: params.k,
        r: params.r,
        seed_size: a0.len(),
        percolated: res.percolated,
        generations: res.generations,
        final_count: res.final_set.len(),
        layer_conditions: layer_mode.map(|m| layer_conditions(&params, m)),
        blocker,
        seed: full_set.then(|| bits(&a0)),
        final_set: full_set.then(|| bits(&res.final_set)),
    };
    let header = ["construction", "n", "k", "r", "seed_size", "percolated", "generations", "final_count"];
    let row = vec![
        record.construction.to_string(),
        params.n.to_string(),
        params.k.to_string(),
        params.r.to_string(),
        record.seed_size.to_string(),
        record.percolated.to_string(),
        record.generations.to_string(),
        record.final_count.to_string(),
    ];
    let table = Table { header: &header, rows: vec![row], json: &record };
    emit(&render(&table, out.format.unwrap_or(Format::Json))?, out.out.as_deref())
}

fn minset(cube: CubeArgs, m_max: u32, max_nodes: u64, max_seconds: Option<f64>, out: &OutArgs) -> CliResult<()> {
    let params = cube.params()?;
    let res = min_contagious_exact(&params, m_max, SearchBudget { max_nodes, max_seconds })?;
    let report = res.report(params.n);
    let header = ["n", "k", "r", "m", "exhausted_to", "nodes_searched", "seconds", "witness"];
    let row = vec![
        params.n.to_string(),
        params.k.to_string(),
        params.r.to_string(),
        report.m.map(|m| m.to_string()).unwrap_or_default(),
        report.exhausted_to.to_string(),
        report.nodes_searched.to_string(),
        fmt_float(report.seconds),
        report.witness.join(" "),
    ];
    let table = Table { header: &header, rows: vec![row], json: &report };
    emit(&render(&table, out.format.unwrap_or(Format::Json))?, out.out.as_deref())
}

fn verify_suite(suite: Suite, opts: VerifyOptions, out: &OutArgs) -> CliResult<()> {
    let checks = verify::run(suite, &opts)?;
    let failures: u64 = checks.iter().map(|c| c.failures).sum();
    let checked: u64 = checks.iter().map(|c| c.checked).sum();
    let table = Table {
        header: &CHECK_COLUMNS,
        rows: checks.iter().map(|c| c.fields()).collect(),
        json: &checks,
    };
    emit(&render(&table, out.format.unwrap_or(Format::Csv))?, out.out.as_deref())?;
    eprintln!("{}: {checked} checked, {failures} failed", suite.name());
    if failures == 0 {
        Ok(())
    } else {
        Err(CliError::Failed(format!("{} reported {failures} failures", suite.name())))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Simulate { cube, set, p, seed, full_set, out } => simulate(cube, &set, p, seed, full_set, &out),
        Command::OracleCheck { cube, set, out } => oracle_check(cube, &set, &out),
        Command::Pc { cube, trials, seed, backend, ratio_tol, out } => pc(cube, trials, seed, backend, ratio_tol, &out),
        Command::Sweep { cube, p, p_grid, trials, seed, backend, out } => {
            sweep(cube, &p, p_grid.as_deref(), trials, seed, backend, &out)
        }
        Command::Construct { cube, construction, mode, n_prime, c, ell, full_set, out } => {
            construct(cube, construction, mode, n_prime, c, ell, full_set, &out)
        }
        Command::Minset { cube, m_max, max_nodes, max_seconds, out } => minset(cube, m_max, max_nodes, max_seconds, &out),
        Command::Verify { suite, n_max, k, random_sets, seed, out } => {
            verify_suite(suite, VerifyOptions { n_max, k, random_sets, seed }, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Failed(msg) | CliError::Io(msg)) = &e;
            eprintln!("percq: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
