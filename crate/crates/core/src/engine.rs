//! Exact synchronous bootstrap-percolation closure.
//!
//! Generation `i + 1` adds every healthy vertex with at least `r` neighbours
//! in generation `i`'s infected set. Counters are updated incrementally: each
//! newly infected vertex pushes one increment to each healthy neighbour, so
//! the total work is `|final set| * degree`.

use serde::{Deserialize, Serialize};

use crate::cube::{GraphParams, NeighborMasks, Vertex, VertexSet};
use crate::error::{Error, Result};

/// Outcome of a closure run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessResult {
    pub final_set: VertexSet,
    pub percolated: bool,
    /// Rounds until the fixpoint; equals `growth.len()`.
    pub generations: usize,
    /// Newly infected count per generation, all positive.
    pub growth: Vec<usize>,
}

impl ProcessResult {
    pub fn initial_count(&self) -> usize {
        self.final_set.len() - self.growth.iter().sum::<usize>()
    }

    pub fn report(&self, include_set: bool) -> ProcessReport {
        let n = self.final_set.n();
        ProcessReport {
            percolated: self.percolated,
            generations: self.generations,
            growth: self.growth.clone(),
            final_count: self.final_set.len(),
            final_set: include_set
                .then(|| self.final_set.iter().map(|v| v.to_bit_string(n)).collect()),
        }
    }
}

/// Serialisable summary of a [`ProcessResult`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub percolated: bool,
    pub generations: usize,
    pub growth: Vec<usize>,
    pub final_count: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_set: Option<Vec<String>>,
}

/// Closure engine for one `(n, k, r)` with its neighbour masks precomputed.
#[derive(Debug, Clone)]
pub struct Engine {
    params: GraphParams,
    masks: NeighborMasks,
}

impl Engine {
    pub fn new(params: GraphParams) -> Result<Self> {
        params.check_dense()?;
        let masks = NeighborMasks::new(params.n, params.k)?;
        Ok(Engine { params, masks })
    }

    pub fn params(&self) -> &GraphParams {
        &self.params
    }

    pub fn masks(&self) -> &NeighborMasks {
        &self.masks
    }

    pub fn closure(&self, a0: &VertexSet) -> Result<ProcessResult> {
        self.check_set(a0)?;
        let r = self.params.r;
        if r <= u16::MAX as u32 {
            Ok(self.run::<u16>(a0.clone(), r as u16))
        } else {
            Ok(self.run::<u32>(a0.clone(), r))
        }
    }

    /// Like [`Engine::closure`] but consumes the seed set.
    pub fn closure_owned(&self, a0: VertexSet) -> Result<ProcessResult> {
        self.check_set(&a0)?;
        let r = self.params.r;
        if r <= u16::MAX as u32 {
            Ok(self.run::<u16>(a0, r as u16))
        } else {
            Ok(self.run::<u32>(a0, r))
        }
    }

    pub fn percolates(&self, a0: &VertexSet) -> Result<bool> {
        Ok(self.closure(a0)?.percolated)
    }

    fn check_set(&self, a0: &VertexSet) -> Result<()> {
        if a0.n() != self.params.n {
            return Err(Error::param(format!(
                "seed set has n={} but the graph has n={}",
                a0.n(),
                self.params.n
            )));
        }
        Ok(())
    }

    fn run<C: Counter>(&self, mut infected: VertexSet, r: C) -> ProcessResult {
        let total = infected.universe();
        let mut growth = Vec::new();
        // r > degree: nothing can ever join
        if self.params.r as u128 > self.masks.len() as u128 || infected.is_full() {
            let percolated = infected.is_full();
            return ProcessResult { final_set: infected, percolated, generations: 0, growth };
        }
        let masks = self.masks.as_slice();
        // infected vertices sit at r, so one comparison skips them
        let mut counters: Vec<C> = vec![C::ZERO; total];
        let mut frontier: Vec<usize> = infected.indices().collect();
        for &v in &frontier {
            counters[v] = r;
        }
        let mut next: Vec<usize> = Vec::new();
        while !frontier.is_empty() && !infected.is_full() {
            next.clear();
            for &v in &frontier {
                for &m in masks {
                    let u = v ^ m as usize;
                    let c = &mut counters[u];
                    if *c < r {
                        *c = c.incr();
                        if *c == r {
                            next.push(u);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            for &u in &next {
                infected.insert_index(u);
            }
            growth.push(next.len());
            std::mem::swap(&mut frontier, &mut next);
        }
        let percolated = infected.is_full();
        ProcessResult { final_set: infected, percolated, generations: growth.len(), growth }
    }
}

trait Counter: Copy + PartialOrd + Eq {
    const ZERO: Self;
    fn incr(self) -> Self;
}

impl Counter for u16 {
    const ZERO: Self = 0;
    #[inline]
    fn incr(self) -> Self {
        self.saturating_add(1)
    }
}

impl Counter for u32 {
    const ZERO: Self = 0;
    #[inline]
    fn incr(self) -> Self {
        self.saturating_add(1)
    }
}

pub fn closure(a0: &VertexSet, params: &GraphParams) -> Result<ProcessResult> {
    Engine::new(*params)?.closure(a0)
}

pub fn percolates(a0: &VertexSet, params: &GraphParams) -> Result<bool> {
    Ok(closure(a0, params)?.percolated)
}

/// True iff every vertex of `b` has fewer than `r` neighbours outside `b`,
/// i.e. the complement of `b` is closed under the process.
pub fn check_stall_certificate(b: &VertexSet, params: &GraphParams) -> Result<bool> {
    params.check_dense()?;
    if b.n() != params.n {
        return Err(Error::param("certificate set dimension does not match params"));
    }
    let masks = NeighborMasks::new(params.n, params.k)?;
    let r = params.r as usize;
    for v in b.indices() {
        let outside = masks
            .as_slice()
            .iter()
            .filter(|&&m| !b.contains_index(v ^ m as usize))
            .take(r)
            .count();
        if outside >= r {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of neighbours of `v` inside `set`.
pub fn infected_neighbor_count(v: Vertex, set: &VertexSet, params: &GraphParams) -> Result<usize> {
    let masks = NeighborMasks::new(params.n, params.k)?;
    Ok(masks
        .as_slice()
        .iter()
        .filter(|&&m| set.contains(Vertex(v.0 ^ m as u128)))
        .count())
}

/// From-scratch reference engine: every round recounts `|N_v ∩ A_i|` for
/// every healthy vertex by scanning the whole cube. Quadratic in `2^n`; kept
/// as an independent oracle for the frontier engine.
#[cfg(any(test, feature = "reference-engine"))]
pub mod reference {
    use super::*;
    use crate::cube::hamming_distance;

    pub fn closure(a0: &VertexSet, params: &GraphParams) -> Result<ProcessResult> {
        params.check_dense()?;
        let n = params.n;
        let size = 1u128 << n;
        let mut current = a0.clone();
        let mut growth = Vec::new();
        loop {
            if current.is_full() {
                break;
            }
            let members: Vec<Vertex> = current.iter().collect();
            let mut added = Vec::new();
            for label in 0..size {
                let v = Vertex(label);
                if current.contains(v) {
                    continue;
                }
                let count = members
                    .iter()
                    .filter(|&&u| {
                        let d = hamming_distance(u, v);
                        d >= 1 && d <= params.k
                    })
                    .count();
                if count >= params.r as usize {
                    added.push(v);
                }
            }
            if added.is_empty() {
                break;
            }
            growth.push(added.len());
            for v in added {
                current.insert(v);
            }
        }
        let percolated = current.is_full();
        Ok(ProcessResult { final_set: current, percolated, generations: growth.len(), growth })
    }
}
