//! Monte Carlo percolation probability and critical-probability search.
//!
//! Randomness is counter based: trial `t` of master seed `s` reads ChaCha8
//! stream `t` keyed by `s`, and vertex `v` consumes word `v` of that stream.
//! Results therefore do not depend on how trials are scheduled across
//! threads, and for a fixed seed the dense sample at `p` is a subset of the
//! sample at any `p' >= p`.

use std::collections::HashSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{GraphParams, Vertex, VertexSet, N_MAX_SPARSE};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::oracle;
use crate::report::{float17, float17_opt};

/// Largest expected sparse sample size accepted by [`sample_points`].
pub const SPARSE_BUDGET: f64 = 1e7;

const WILSON_Z: f64 = 1.959_963_984_540_054;

/// How a trial decides percolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Dense sample, exact closure.
    Engine,
    /// Sparse sample, closed-form pair/triple predicate (`r in {2, 3}`).
    Oracle,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Engine => "engine",
            Backend::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "engine" => Ok(Backend::Engine),
            "oracle" => Ok(Backend::Oracle),
            other => Err(Error::param(format!("unknown backend {other:?}"))),
        }
    }
}

/// Position in the counter-based random stream: master seed plus trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub trial: u64,
}

impl Seed {
    pub fn new(master: u64) -> Self {
        Seed { master, trial: 0 }
    }

    pub fn for_trial(self, trial: u64) -> Self {
        Seed { master: self.master, trial }
    }

    fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.trial);
        rng
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(format!("probability {p} outside [0, 1]")))
    }
}

/// Includes vertex `v` iff its uniform `U_v < p`, with `U_v` the `v`-th
/// 53-bit draw of the seed's stream.
pub fn sample_initial(params: &GraphParams, p: f64, seed: Seed) -> Result<VertexSet> {
    params.check_dense()?;
    check_probability(p)?;
    let mut set = VertexSet::empty(params.n)?;
    if p == 0.0 {
        return Ok(set);
    }
    // U < p  <=>  (x >> 11) < ceil(p * 2^53)
    let cutoff = (p * (1u64 << 53) as f64).ceil() as u64;
    let mut rng = seed.rng();
    for v in 0..set.universe() {
        if rng.next_u64() >> 11 < cutoff {
            set.insert_index(v);
        }
    }
    Ok(set)
}

/// Distinct `n`-bit points without a `2^n` structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsePointList {
    pub n: u32,
    pub points: Vec<Vertex>,
}

impl SparsePointList {
    pub fn new(n: u32, mut points: Vec<Vertex>) -> Result<Self> {
        if n == 0 || n > N_MAX_SPARSE {
            return Err(Error::param(format!("sparse dimension {n} outside 1..={N_MAX_SPARSE}")));
        }
        if points.iter().any(|p| !p.fits(n)) {
            return Err(Error::param(format!("point does not fit in n={n}")));
        }
        points.sort_unstable();
        points.dedup();
        Ok(SparsePointList { n, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Bernoulli(`p`) sample of `{0,1}^n` drawn without the dense vector: the
/// count is Binomial(`2^n`, `p`) (Poisson(`2^n p`) beyond `n = 32`) and the
/// points are distinct uniform labels.
pub fn sample_points(n: u32, p: f64, seed: Seed) -> Result<SparsePointList> {
    check_probability(p)?;
    if n == 0 || n > N_MAX_SPARSE {
        return Err(Error::param(format!("sparse dimension {n} outside 1..={N_MAX_SPARSE}")));
    }
    let expected = p * 2f64.powi(n as i32);
    if expected > SPARSE_BUDGET {
        return Err(Error::Refused(format!(
            "expected {expected:.3e} points exceeds the sparse budget of {SPARSE_BUDGET:.0e}"
        )));
    }
    if p == 0.0 {
        return Ok(SparsePointList { n, points: Vec::new() });
    }
    let mut rng = seed.rng();
    let count: u64 = if n <= 32 {
        Binomial::new(1u64 << n, p)
            .map_err(|e| Error::param(e.to_string()))?
            .sample(&mut rng)
    } else {
        Poisson::new(expected)
            .map_err(|e| Error::param(e.to_string()))?
            .sample(&mut rng) as u64
    };
    let mask = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut seen: HashSet<u128> = HashSet::with_capacity(count as usize);
    let mut points = Vec::with_capacity(count as usize);
    while (points.len() as u64) < count {
        let label = rng.random::<u128>() & mask;
        if seen.insert(label) {
            points.push(Vertex(label));
        }
    }
    points.sort_unstable();
    Ok(SparsePointList { n, points })
}

/// Percolation frequency at one `p` with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(serialize_with = "float17")]
    pub p: f64,
    pub trials: u64,
    pub successes: u64,
    #[serde(serialize_with = "float17")]
    pub point: f64,
    #[serde(serialize_with = "float17")]
    pub ci_low: f64,
    #[serde(serialize_with = "float17")]
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_counts(p: f64, trials: u64, successes: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        let point = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        Estimate { p, trials, successes, point, ci_low, ci_high }
    }
}

/// 95% Wilson score interval for `successes / trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nt = trials as f64;
    let phat = successes as f64 / nt;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nt;
    let center = (phat + z2 / (2.0 * nt)) / denom;
    let half = WILSON_Z / denom * (phat * (1.0 - phat) / nt + z2 / (4.0 * nt * nt)).sqrt();
    let low = (center - half).min(phat).max(0.0);
    let high = (center + half).max(phat).min(1.0);
    (low, high)
}

/// Per-trial percolation decider shared by all trials of one evaluation.
pub struct TrialRunner {
    params: GraphParams,
    backend: Backend,
    engine: Option<Engine>,
}

impl TrialRunner {
    pub fn new(params: GraphParams, backend: Backend) -> Result<Self> {
        let engine = match backend {
            Backend::Engine => Some(Engine::new(params)?),
            Backend::Oracle => {
                if !(params.r == 2 || params.r == 3) {
                    return Err(Error::Refused(format!(
                        "oracle backend needs r in {{2, 3}}; r={} has no closed-form criterion",
                        params.r
                    )));
                }
                if params.r == 3 && params.k < 2 {
                    return Err(Error::Refused("oracle backend with r=3 needs k >= 2".into()));
                }
                None
            }
        };
        Ok(TrialRunner { params, backend, engine })
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn trial(&self, p: f64, seed: Seed) -> Result<bool> {
        match &self.engine {
            Some(engine) => {
                let a0 = sample_initial(&self.params, p, seed)?;
                Ok(engine.closure_owned(a0)?.percolated)
            }
            None => {
                let sample = sample_points(self.params.n, p, seed)?;
                oracle::oracle_verdict(&sample.points, &self.params)
            }
        }
    }

    /// Runs trials `0..trials` of `seed.master`. Successes are summed, so the
    /// result is independent of the rayon schedule.
    pub fn estimate(&self, p: f64, trials: u64, seed: Seed) -> Result<Estimate> {
        check_probability(p)?;
        let successes = (0..trials)
            .into_par_iter()
            .map(|t| self.trial(p, seed.for_trial(t)).map(u64::from))
            .try_reduce(|| 0, |a, b| Ok(a + b))?;
        Ok(Estimate::from_counts(p, trials, successes))
    }
}

pub fn estimate_prob(
    params: &GraphParams,
    p: f64,
    trials: u64,
    seed: u64,
    backend: Backend,
) -> Result<Estimate> {
    TrialRunner::new(*params, backend)?.estimate(p, trials, Seed::new(seed))
}

pub fn sweep(
    params: &GraphParams,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    backend: Backend,
) -> Result<Vec<Estimate>> {
    let runner = TrialRunner::new(*params, backend)?;
    p_grid
        .iter()
        .map(|&p| runner.estimate(p, trials, Seed::new(seed)))
        .collect()
}

/// `count` points log-spaced from `low` to `high` inclusive.
pub fn log_grid(low: f64, high: f64, count: usize) -> Result<Vec<f64>> {
    if !(low > 0.0 && high >= low && high <= 1.0) || count == 0 {
        return Err(Error::param("log grid needs 0 < low <= high <= 1 and count >= 1"));
    }
    if count == 1 {
        return Ok(vec![low]);
    }
    let (a, b) = (low.ln(), high.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

/// Bracket around the critical probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcResult {
    pub n: u32,
    pub k: u32,
    pub r: u32,
    #[serde(serialize_with = "float17")]
    pub p_low: f64,
    #[serde(serialize_with = "float17")]
    pub p_high: f64,
    /// Geometric mean of the bracket.
    #[serde(serialize_with = "float17")]
    pub p_hat: f64,
    pub trials_per_eval: u64,
    pub backend: Backend,
    pub evals: usize,
    pub seed: u64,
    #[serde(serialize_with = "float17_opt", skip_serializing_if = "Option::is_none", default)]
    pub rate_low: Option<f64>,
    #[serde(serialize_with = "float17_opt", skip_serializing_if = "Option::is_none", default)]
    pub rate_high: Option<f64>,
    /// Every evaluation in the order performed.
    #[serde(skip)]
    pub history: Vec<Estimate>,
}

/// `2^{-n/r} n^{-k}`, the scale of `p_c` for `r in {2, 3}`.
pub fn theoretical_scale(params: &GraphParams) -> f64 {
    let (n, k, r) = (params.n as f64, params.k as f64, params.r as f64);
    2f64.powf(-n / r) * n.powf(-k)
}

/// Finds `p_low < p_high` with estimated percolation probability `<= 1/2`
/// at `p_low` and `> 1/2` at `p_high`, then bisects on `log p` until
/// `p_high / p_low <= ratio_tol`. Every evaluation reuses the same master
/// seed, so outcomes are coupled across `p`.
pub fn find_pc(
    params: &GraphParams,
    trials_per_eval: u64,
    seed: u64,
    backend: Backend,
    ratio_tol: f64,
) -> Result<PcResult> {
    if ratio_tol.is_nan() || ratio_tol <= 1.0 {
        return Err(Error::param(format!("ratio_tol must exceed 1, got {ratio_tol}")));
    }
    if trials_per_eval == 0 {
        return Err(Error::param("trials_per_eval must be positive"));
    }
    if params.r as u128 > params.degree() {
        return Err(Error::Refused(format!(
            "r={} exceeds the degree {}: no vertex can ever be newly infected",
            params.r,
            params.degree()
        )));
    }
    let runner = TrialRunner::new(*params, backend)?;
    let master = Seed::new(seed);
    let mut history: Vec<Estimate> = Vec::new();
    let eval = |p: f64, history: &mut Vec<Estimate>| -> Result<f64> {
        let est = runner.estimate(p, trials_per_eval, master)?;
        history.push(est);
        Ok(est.point)
    };

    let start = theoretical_scale(params).clamp(f64::MIN_POSITIVE, 0.5);
    let (mut lo, mut hi, mut rate_lo, mut rate_hi);
    let r0 = eval(start, &mut history)?;
    if r0 <= 0.5 {
        (lo, rate_lo) = (start, r0);
        let mut p = start;
        loop {
            p = (p * 2.0).min(1.0);
            let rate = eval(p, &mut history)?;
            if rate > 0.5 {
                (hi, rate_hi) = (p, rate);
                break;
            }
            (lo, rate_lo) = (p, rate);
            if p >= 1.0 {
                return Err(Error::Refused("percolation probability stays <= 1/2 at p = 1".into()));
            }
        }
    } else {
        (hi, rate_hi) = (start, r0);
        let mut p = start;
        loop {
            p /= 2.0;
            if p < 1e-300 {
                return Err(Error::Refused("percolation probability stays > 1/2 as p -> 0".into()));
            }
            let rate = eval(p, &mut history)?;
            if rate <= 0.5 {
                (lo, rate_lo) = (p, rate);
                break;
            }
            (hi, rate_hi) = (p, rate);
        }
    }
    while hi / lo > ratio_tol {
        let mid = (lo * hi).sqrt();
        let rate = eval(mid, &mut history)?;
        if rate <= 0.5 {
            (lo, rate_lo) = (mid, rate);
        } else {
            (hi, rate_hi) = (mid, rate);
        }
    }
    Ok(PcResult {
        n: params.n,
        k: params.k,
        r: params.r,
        p_low: lo,
        p_high: hi,
        p_hat: (lo * hi).sqrt(),
        trials_per_eval,
        backend,
        evals: history.len(),
        seed,
        rate_low: Some(rate_lo),
        rate_high: Some(rate_hi),
        history,
    })
}
