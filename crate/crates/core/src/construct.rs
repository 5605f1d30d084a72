//! Explicit percolating sets and lower-bound blocker certificates.

use serde::{Deserialize, Serialize};

use crate::cube::{binomial, masks_of_weight, GraphParams, Vertex, VertexSet};
use crate::engine::check_stall_certificate;
use crate::error::{Error, Result};

/// Where a layered seed lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerMode {
    /// Inside the subcube spanned by the first `r - 1` coordinates.
    Subcube,
    /// Across the whole cube.
    Fullcube,
}

impl std::str::FromStr for LayerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subcube" => Ok(LayerMode::Subcube),
            "fullcube" => Ok(LayerMode::Fullcube),
            other => Err(Error::param(format!("unknown layer mode {other:?}"))),
        }
    }
}

/// Target layer index and the weight layers a layered seed occupies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub mode: LayerMode,
    pub m: u32,
    /// Dimension of the region the layers live in.
    pub ambient: u32,
    pub layers: Vec<u32>,
}

impl LayerSpec {
    pub fn layer_count(&self) -> u32 {
        self.layers.len() as u32
    }
}

/// Largest `x` with `x^k <= value`.
pub fn integer_root(value: u128, k: u32) -> u128 {
    if k == 1 || value < 2 {
        return value;
    }
    let fits = |x: u128| -> bool {
        let mut acc: u128 = 1;
        for _ in 0..k {
            match acc.checked_mul(x) {
                Some(v) if v <= value => acc = v,
                _ => return false,
            }
        }
        true
    };
    let (mut lo, mut hi) = (1u128, 1u128);
    while fits(hi) {
        lo = hi;
        hi *= 2;
    }
    // fits(lo) && !fits(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `m_r = floor(sqrt(2r))` for `k = 2`, `m_{k,r} = floor(k r^{1/k})` for `k >= 3`.
pub fn target_layer(k: u32, r: u32) -> Result<u32> {
    match k {
        0 | 1 => Err(Error::param("layered seeds are defined for k >= 2")),
        2 => Ok(integer_root(2 * r as u128, 2) as u32),
        _ => {
            // floor(k r^{1/k}) = floor((k^k r)^{1/k})
            let scaled = (k as u128)
                .checked_pow(k)
                .and_then(|kk| kk.checked_mul(r as u128))
                .ok_or_else(|| Error::param(format!("k={k} too large for exact root")))?;
            Ok(integer_root(scaled, k) as u32)
        }
    }
}

pub fn layer_spec(params: &GraphParams, mode: LayerMode) -> Result<LayerSpec> {
    let GraphParams { n, k, r } = *params;
    let m = target_layer(k, r)?;
    let ambient = match mode {
        LayerMode::Subcube => {
            if r - 1 > n {
                return Err(Error::param(format!("subcube mode needs r - 1 <= n, got r={r} n={n}")));
            }
            r - 1
        }
        LayerMode::Fullcube => n,
    };
    let layers: Vec<u32> = match (k, mode) {
        (2, LayerMode::Subcube) => {
            if m == 0 {
                return Err(Error::param("layer m_r - 1 is negative"));
            }
            vec![m - 1, m]
        }
        (2, LayerMode::Fullcube) => vec![m, m + 1],
        _ => (0..k).map(|j| m + j).collect(),
    };
    if let Some(&top) = layers.last() {
        if top > ambient {
            return Err(Error::param(format!(
                "layer {top} exceeds the ambient dimension {ambient}"
            )));
        }
    }
    Ok(LayerSpec { mode, m, ambient, layers })
}

/// The first `r - 1` coordinates, all combinations: an `(r-1)`-dimensional subcube.
pub fn subcube_seed(params: &GraphParams) -> Result<VertexSet> {
    let GraphParams { n, r, .. } = *params;
    if r - 1 > n {
        return Err(Error::param(format!("subcube seed needs r - 1 <= n, got r={r} n={n}")));
    }
    crate::cube::subcube_vertices(Vertex::run(0, r - 1), Vertex::ZERO, n)
}

/// `r` vertices for `2 <= r <= 2k`: the origin, the run `1^{r-1}`, and that
/// run with one of coordinates `1..=r-2` cleared.
pub fn small_r_set(params: &GraphParams) -> Result<VertexSet> {
    let GraphParams { n, k, r } = *params;
    if r < 2 || r > 2 * k {
        return Err(Error::param(format!("small-r set needs 2 <= r <= 2k, got r={r} k={k}")));
    }
    if n < r {
        return Err(Error::param(format!("small-r set needs n >= r, got n={n} r={r}")));
    }
    let top = Vertex::run(0, r - 1);
    let mut points = vec![Vertex::ZERO, top];
    for j in 3..=r {
        points.push(Vertex(top.0 & !(1u128 << (r + 1 - j))));
    }
    VertexSet::from_vertices(n, points)
}

/// Hand-built sets for `k = 2`, `r in {5, 6}`.
pub fn fixed_small_sets(r: u32, n: u32) -> Result<VertexSet> {
    let points: Vec<Vertex> = match r {
        5 => {
            if n < 4 {
                return Err(Error::param("the r=5 set needs n >= 4"));
            }
            (0..5).map(|i| Vertex::run(0, i)).collect()
        }
        6 => {
            if n < 6 {
                return Err(Error::param("the r=6 set needs n >= 6"));
            }
            vec![
                Vertex::ZERO,
                Vertex::run(1, 2),
                Vertex::run(2, 3),
                Vertex::run(0, 4),
                Vertex::run(1, 4),
                Vertex::run(2, 4),
            ]
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "fixed sets exist only for r=5 and r=6 (got r={r}); use small_r_set or layer_seed"
            )))
        }
    };
    VertexSet::from_vertices(n, points)
}

pub fn layer_seed(params: &GraphParams, mode: LayerMode) -> Result<VertexSet> {
    let spec = layer_spec(params, mode)?;
    let mut seed = VertexSet::empty(params.n)?;
    for &j in &spec.layers {
        for m in masks_of_weight(spec.ambient, j) {
            seed.insert(Vertex(m as u128));
        }
    }
    Ok(seed)
}

fn choose(n: i64, k: u32) -> u128 {
    if n < 0 {
        0
    } else {
        binomial(n as u64, k as u64)
    }
}

/// Evaluates the downward (`i = 1`) and upward (`i = layer_count`) spreading
/// inequalities literally. False when the layer spec itself is invalid.
pub fn layer_conditions(params: &GraphParams, mode: LayerMode) -> bool {
    let Ok(spec) = layer_spec(params, mode) else {
        return false;
    };
    let (k, r) = (params.k, params.r as u128);
    let m = spec.m as i64;
    let down_i = 1i64;
    let up_i = spec.layer_count() as i64;
    let down = match mode {
        LayerMode::Subcube => choose(params.r as i64 - 1 - (m - down_i), k),
        LayerMode::Fullcube => choose(params.n as i64 - (m - down_i), k),
    };
    let up = choose(m + up_i, k);
    down >= r && up >= r
}

/// The unit vectors `e_1..e_r` (`k >= 3`).
pub fn weight_one_seed(params: &GraphParams) -> Result<VertexSet> {
    let GraphParams { n, k, r } = *params;
    if k < 3 {
        return Err(Error::param(format!("weight-one seed needs k >= 3, got k={k}")));
    }
    if r > n {
        return Err(Error::param(format!("weight-one seed needs r <= n, got r={r} n={n}")));
    }
    VertexSet::from_vertices(n, (0..r).map(Vertex::unit))
}

/// Parameters of a replicated-pattern blocker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockerSpec {
    pub n_prime: u32,
    pub c: f64,
    pub ell: f64,
    /// Infected fraction of each `n'`-subcube, `1 - |healthy| / 2^{n'}`.
    pub delta: f64,
    /// Healthy `n'`-bit patterns of the first `n'` coordinates.
    pub healthy_patterns: Vec<u32>,
}

impl BlockerSpec {
    pub fn new(n_prime: u32, c: f64, ell: f64, healthy_patterns: Vec<u32>) -> Result<Self> {
        if n_prime == 0 || n_prime > 24 {
            return Err(Error::param(format!("n' must lie in 1..=24, got {n_prime}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::param(format!("c must lie in (0,1), got {c}")));
        }
        if !(ell > 0.0 && ell <= 1.0) {
            return Err(Error::param(format!("ell must lie in (0,1], got {ell}")));
        }
        let mut patterns = healthy_patterns;
        patterns.sort_unstable();
        patterns.dedup();
        if let Some(&p) = patterns.last() {
            if p >> n_prime != 0 {
                return Err(Error::param(format!("pattern {p:#x} has more than {n_prime} bits")));
            }
        }
        let total = (1u64 << n_prime) as f64;
        let delta = 1.0 - patterns.len() as f64 / total;
        Ok(BlockerSpec { n_prime, c, ell, delta, healthy_patterns: patterns })
    }

    /// Every pattern except all-ones healthy, so `delta = 2^{-n'}`.
    pub fn with_default_patterns(n_prime: u32, c: f64, ell: f64) -> Result<Self> {
        if n_prime == 0 || n_prime > 24 {
            return Err(Error::param(format!("n' must lie in 1..=24, got {n_prime}")));
        }
        let all_ones = (1u32 << n_prime) - 1;
        Self::new(n_prime, c, ell, (0..all_ones).collect())
    }
}

/// `sum_{i=1..k} C(n', i)`: neighbours inside one `n'`-subcube.
pub fn blocker_inner_degree(n_prime: u32, k: u32) -> u128 {
    (1..=k).map(|i| binomial(n_prime as u64, i as u64)).sum()
}

/// `sum_{i=1..k-1} sum_{j=1..k-i} C(n', j) C(n - n', i)`: mixed neighbours.
pub fn blocker_cross_degree(n: u32, n_prime: u32, k: u32) -> u128 {
    let mut total = 0u128;
    for i in 1..k {
        for j in 1..=k - i {
            total += binomial(n_prime as u64, j as u64) * binomial((n - n_prime) as u64, i as u64);
        }
    }
    total
}

/// Both blocker inequalities, evaluated with the blocker's `c` and `ell`.
pub fn blocker_feasible(n: u32, spec: &BlockerSpec, k: u32, r: u32) -> Result<bool> {
    let n_prime = spec.n_prime;
    if n_prime == 0 || n_prime >= n {
        return Err(Error::param(format!("need 1 <= n' < n, got n'={n_prime} n={n}")));
    }
    if k == 0 {
        return Err(Error::param("k must be positive"));
    }
    let budget = spec.c * (r as f64).powf(spec.ell);
    let tol = 1e-9 * budget.abs().max(1.0);
    let inner = blocker_inner_degree(n_prime, k) as f64;
    let cross = blocker_cross_degree(n, n_prime, k) as f64;
    Ok(inner <= budget + tol && cross <= r as f64 - budget + tol)
}

/// `B` = every vertex whose first `n'` coordinates form a healthy pattern;
/// `A0` = the rest. Refuses unless the blocker is feasible and `B` is a valid
/// stall certificate.
pub fn blocker_construct(spec: &BlockerSpec, params: &GraphParams) -> Result<(VertexSet, VertexSet)> {
    let GraphParams { n, k, r } = *params;
    params.check_dense()?;
    if !blocker_feasible(n, spec, k, r)? {
        return Err(Error::Refused("blocker inequalities do not hold".into()));
    }
    let total = 1usize << spec.n_prime;
    if spec.healthy_patterns.is_empty() {
        return Err(Error::Refused("no healthy patterns: B would be empty".into()));
    }
    if spec.healthy_patterns.len() >= total {
        return Err(Error::Refused("every pattern healthy: A0 would be empty".into()));
    }
    let mut healthy = vec![false; total];
    for &p in &spec.healthy_patterns {
        healthy[p as usize] = true;
    }
    let low = (total - 1) as u128;
    let mut b = VertexSet::empty(n)?;
    for label in 0..(1u128 << n) {
        if healthy[(label & low) as usize] {
            b.insert(Vertex(label));
        }
    }
    if !check_stall_certificate(&b, params)? {
        return Err(Error::Refused(
            "constructed blocker is not a stall certificate (a vertex has r outside neighbours)".into(),
        ));
    }
    Ok((b.complement(), b))
}

/// Which closed-form lower bound applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorollaryCase {
    K2General,
    K2EllOne,
    K3General,
    K3EllOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryBound {
    pub case: CorollaryCase,
    /// Smallest `r` for which the case's regime holds.
    pub regime_threshold: f64,
    pub value: f64,
}

/// Closed-form lower bounds on the minimum contagious set size.
///
/// `ell == 1` selects the `ell = 1` lines; `ell < 1` the general lines.
pub fn corollary_bound(k: u32, r: u32, n: u32, c: f64, ell: f64, delta: f64) -> Result<CorollaryBound> {
    if !(c > 0.0 && c < 1.0) || !(delta > 0.0 && delta < 1.0) || !(ell > 0.0 && ell <= 1.0) {
        return Err(Error::param("need 0 < c < 1, 0 < delta < 1 and 0 < ell <= 1"));
    }
    if k < 2 {
        return Err(Error::param("the bounds are stated for k >= 2"));
    }
    let (kf, rf, nf) = (k as f64, r as f64, n as f64);
    let e = std::f64::consts::E;
    let ell_one = ell == 1.0;
    let (case, threshold, value) = if k == 2 {
        let value = delta * 2f64.powf((2.0 * c * rf).sqrt());
        let s = (2.0 * c).sqrt();
        if ell_one {
            (CorollaryCase::K2EllOne, nf * nf / (s + (1.0 - c) / s).powi(2), value)
        } else {
            let ex = 2.0 / (2.0 - ell);
            (CorollaryCase::K2General, nf.powf(ex) * (s / (2.0 * (1.0 - c))).powf(ex), value)
        }
    } else if ell_one {
        let inner = 2.0 / (1.0 - c) * (e / (kf - 1.0)).powf(kf - 1.0) * (c / 2.0).powf(1.0 / kf) * kf / e;
        let threshold = nf.powf(kf) * inner.powf(kf / (kf - 1.0));
        let value = delta * (rf.powf(1.0 / kf) * kf / e * (c / 2.0).powf(1.0 / kf)).exp();
        (CorollaryCase::K3EllOne, threshold, value)
    } else {
        let threshold = nf.powf(kf * (kf - 1.0) / (kf - ell))
            * (e / (kf - 1.0)).powf((kf - 1.0) * kf / (kf - ell))
            * (c / 2.0).powf(kf / (kf * (kf - ell)) / (1.0 - c));
        let value = delta * (rf.powf(ell / kf) * kf / e * (c / kf).powf(1.0 / kf)).exp();
        (CorollaryCase::K3General, threshold, value)
    };
    if rf < threshold {
        return Err(Error::NoBoundApplicable(format!(
            "r={r} is below the regime threshold {threshold:.6} for case {case:?}"
        )));
    }
    Ok(CorollaryBound { case, regime_threshold: threshold, value })
}
