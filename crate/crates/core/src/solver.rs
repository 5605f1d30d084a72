//! Exact minimum contagious sets for small `n`.
//!
//! Sets are grown one vertex at a time. Every set is translated so it
//! contains the origin, and sets equivalent under XOR-translation plus
//! coordinate permutation are merged through [`canonicalize`] before they
//! are extended. The size under test is streamed in order of total Hamming
//! weight, since contagious sets tend to sit close to the origin.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{hamming_distance, masks_of_weight, GraphParams, Vertex, VertexSet};
use crate::engine::Engine;
use crate::error::{Error, Result};
use crate::oracle;

/// Largest `n` the exact search accepts.
pub const SOLVER_MAX_N: u32 = 10;

/// Sets up to this size get an exact orbit key.
pub const EXACT_CANON_LIMIT: usize = 6;

/// Orbit key under translation and coordinate permutation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey {
    size: usize,
    columns: Vec<u64>,
}

/// Key plus the representative set it encodes (contains the origin, sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalForm {
    pub key: CanonicalKey,
    pub representative: Vec<Vertex>,
}

/// Canonical orbit key of `points` in `{0,1}^n`.
///
/// For `|A| <= 6` the key is a complete invariant: two sets share a key iff
/// a translation plus coordinate permutation maps one onto the other. For
/// larger sets only one row order is tried, so equivalent sets may receive
/// different keys, but sets with equal keys are always equivalent.
pub fn canonicalize(points: &[Vertex], n: u32) -> CanonicalKey {
    canonical_form(points, n).key
}

pub fn canonical_form(points: &[Vertex], n: u32) -> CanonicalForm {
    let mut pts: Vec<Vertex> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    assert!(pts.len() <= 65, "canonical form supports at most 65 points");
    if pts.is_empty() {
        return CanonicalForm {
            key: CanonicalKey { size: 0, columns: Vec::new() },
            representative: Vec::new(),
        };
    }
    let exact = pts.len() <= EXACT_CANON_LIMIT;

    // Only translations with the smallest sorted distance profile can win.
    let profile = |t: Vertex| -> Vec<u32> {
        let mut d: Vec<u32> = pts.iter().map(|&p| hamming_distance(p, t)).collect();
        d.sort_unstable();
        d
    };
    let profiles: Vec<Vec<u32>> = pts.iter().map(|&t| profile(t)).collect();
    let best_profile = profiles.iter().min().unwrap().clone();
    let mut translations: Vec<Vertex> = pts
        .iter()
        .zip(&profiles)
        .filter(|(_, p)| **p == best_profile)
        .map(|(&t, _)| t)
        .collect();
    if !exact {
        translations.truncate(1);
    }

    let mut best: Option<Vec<u64>> = None;
    for t in translations {
        // rows: translated non-origin members, ordered by weight
        let mut rows: Vec<u128> = pts.iter().map(|&p| (p ^ t).0).filter(|&x| x != 0).collect();
        rows.sort_unstable_by_key(|&x| (x.count_ones(), x));
        let groups = weight_groups(&rows);
        let mut visit = |order: &[u128]| {
            let cols = sorted_columns(order, n);
            if best.as_ref().is_none_or(|b| cols < *b) {
                best = Some(cols);
            }
        };
        if exact {
            for_each_grouped_permutation(&rows, &groups, &mut visit);
        } else {
            visit(&rows);
        }
    }
    let columns = best.unwrap();
    let representative = rebuild(&columns, pts.len() - 1);
    CanonicalForm {
        key: CanonicalKey { size: pts.len(), columns },
        representative,
    }
}

fn weight_groups(rows: &[u128]) -> Vec<(usize, usize)> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].count_ones() != rows[start].count_ones() {
            groups.push((start, i));
            start = i;
        }
    }
    groups
}

/// Column `j` packs bit `j` of every row, row `i` at bit `i`.
fn sorted_columns(rows: &[u128], n: u32) -> Vec<u64> {
    let mut cols: Vec<u64> = (0..n)
        .map(|j| {
            rows.iter()
                .enumerate()
                .fold(0u64, |acc, (i, &row)| acc | (((row >> j) & 1) as u64) << i)
        })
        .collect();
    cols.sort_unstable();
    cols
}

fn rebuild(columns: &[u64], rows: usize) -> Vec<Vertex> {
    let mut out = vec![Vertex::ZERO];
    for i in 0..rows {
        let mut label = 0u128;
        for (j, &c) in columns.iter().enumerate() {
            if c >> i & 1 == 1 {
                label |= 1u128 << j;
            }
        }
        out.push(Vertex(label));
    }
    out.sort_unstable();
    out
}

/// Calls `visit` with every ordering of `rows` that permutes only within
/// each weight group.
fn for_each_grouped_permutation(rows: &[u128], groups: &[(usize, usize)], visit: &mut impl FnMut(&[u128])) {
    fn recurse(work: &mut Vec<u128>, groups: &[(usize, usize)], g: usize, visit: &mut impl FnMut(&[u128])) {
        let Some(&(start, end)) = groups.get(g) else {
            visit(work);
            return;
        };
        permute_range(work, start, end, &mut |w: &mut Vec<u128>| recurse(w, groups, g + 1, visit));
    }
    fn permute_range(
        work: &mut Vec<u128>,
        pos: usize,
        end: usize,
        next: &mut impl FnMut(&mut Vec<u128>),
    ) {
        if end - pos <= 1 {
            next(work);
            return;
        }
        for i in pos..end {
            work.swap(pos, i);
            permute_range(work, pos + 1, end, next);
            work.swap(pos, i);
        }
    }
    let mut work = rows.to_vec();
    recurse(&mut work, groups, 0, visit);
}

/// Limits on the exact search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Candidate sets examined, counting both tests and canonicalisations.
    pub max_nodes: u64,
    pub max_seconds: Option<f64>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_nodes: 500_000_000, max_seconds: None }
    }
}

/// Result of the exact search.
#[derive(Debug, Clone, PartialEq)]
pub struct MinSetResult {
    /// Minimum contagious size, when the search reached one.
    pub m: Option<u32>,
    pub witness: Option<Vec<Vertex>>,
    /// Largest size known to admit no contagious set.
    pub exhausted_to: u32,
    pub nodes_searched: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSetReport {
    pub m: Option<u32>,
    pub witness: Vec<String>,
    pub exhausted_to: u32,
    pub nodes_searched: u64,
    pub seconds: f64,
}

impl MinSetResult {
    pub fn report(&self, n: u32) -> MinSetReport {
        MinSetReport {
            m: self.m,
            witness: self
                .witness
                .iter()
                .flatten()
                .map(|v| v.to_bit_string(n))
                .collect(),
            exhausted_to: self.exhausted_to,
            nodes_searched: self.nodes_searched,
            seconds: self.seconds,
        }
    }
}

struct Search<'a> {
    params: GraphParams,
    engine: &'a Engine,
    budget: SearchBudget,
    nodes: u64,
    started: Instant,
}

enum Outcome<T> {
    Done(T),
    OutOfBudget,
}

impl Search<'_> {
    fn tick(&mut self, count: u64) -> bool {
        self.nodes += count;
        if self.nodes > self.budget.max_nodes {
            return false;
        }
        match self.budget.max_seconds {
            Some(limit) => self.started.elapsed().as_secs_f64() <= limit,
            None => true,
        }
    }

    /// Cheap exact filters from the `r = 2, 3` characterisations.
    fn may_percolate(&self, set: &[Vertex]) -> bool {
        match self.params.r {
            2 => oracle::pair_condition(set, self.params.k),
            3 if self.params.k >= 2 => oracle::find_triangle(set, self.params.k).is_some(),
            _ => true,
        }
    }

    fn percolates(&self, set: &[Vertex]) -> bool {
        if !self.may_percolate(set) {
            return false;
        }
        let seed = VertexSet::from_vertices(self.params.n, set.iter().copied()).expect("in range");
        self.engine.closure_owned(seed).expect("dimension checked").percolated
    }

    /// Tests every `rep + v` in order of total weight; returns the first
    /// contagious one.
    fn test_level(&mut self, level: &[Vec<Vertex>]) -> Outcome<Option<Vec<Vertex>>> {
        let n = self.params.n;
        let weights: Vec<u32> = level.iter().map(|s| s.iter().map(|v| v.weight()).sum()).collect();
        let max_total = weights.iter().max().copied().unwrap_or(0) + n;
        for total in 0..=max_total {
            let batch: Vec<Vec<Vertex>> = level
                .iter()
                .zip(&weights)
                .filter(|(_, &w)| w <= total && total - w <= n)
                .flat_map(|(rep, &w)| {
                    masks_of_weight(n, total - w)
                        .map(|m| Vertex(m as u128))
                        .filter(move |v| rep.binary_search(v).is_err())
                        .map(move |v| {
                            let mut s = rep.clone();
                            s.push(v);
                            s.sort_unstable();
                            s
                        })
                })
                .collect();
            if !self.tick(batch.len() as u64) {
                return Outcome::OutOfBudget;
            }
            if let Some(found) = batch.par_iter().find_first(|s| self.percolates(s)) {
                return Outcome::Done(Some(found.clone()));
            }
        }
        Outcome::Done(None)
    }

    /// Canonical representatives of every set `rep + v`, sorted by
    /// (total weight, labels).
    fn extend_level(&mut self, level: &[Vec<Vertex>]) -> Outcome<Vec<Vec<Vertex>>> {
        let n = self.params.n;
        let mut next: BTreeMap<CanonicalKey, Vec<Vertex>> = BTreeMap::new();
        for rep in level {
            if !self.tick(1u64 << n) {
                return Outcome::OutOfBudget;
            }
            for label in 0..(1u128 << n) {
                let v = Vertex(label);
                if rep.binary_search(&v).is_ok() {
                    continue;
                }
                let mut s = rep.clone();
                s.push(v);
                let form = canonical_form(&s, n);
                next.entry(form.key).or_insert(form.representative);
            }
        }
        let mut reps: Vec<Vec<Vertex>> = next.into_values().collect();
        reps.sort_by_key(|s| (s.iter().map(|v| v.weight()).sum::<u32>(), s.clone()));
        Outcome::Done(reps)
    }
}

/// Smallest contagious set size in `r..=m_max`, searched exhaustively up to
/// symmetry.
pub fn min_contagious_exact(params: &GraphParams, m_max: u32, budget: SearchBudget) -> Result<MinSetResult> {
    if params.n > SOLVER_MAX_N {
        return Err(Error::param(format!(
            "exact search supports n <= {SOLVER_MAX_N}, got n={}",
            params.n
        )));
    }
    if m_max < params.r {
        return Err(Error::param(format!("m_max={m_max} is below r={}", params.r)));
    }
    let engine = Engine::new(*params)?;
    let mut search = Search { params: *params, engine: &engine, budget, nodes: 0, started: Instant::now() };
    let universe = 1u64 << params.n;
    let finish = |search: &Search, m: Option<u32>, witness: Option<Vec<Vertex>>, exhausted_to: u32| MinSetResult {
        m,
        witness,
        exhausted_to,
        nodes_searched: search.nodes,
        seconds: search.started.elapsed().as_secs_f64(),
    };

    // fewer than r seeds can never infect anything
    let mut exhausted_to = params.r - 1;
    let mut level: Vec<Vec<Vertex>> = vec![vec![Vertex::ZERO]];
    let mut size = 1u32;
    let top = m_max.min(universe as u32);
    while size < top {
        let target = size + 1;
        if target >= params.r {
            match search.test_level(&level) {
                Outcome::Done(Some(witness)) => {
                    return Ok(finish(&search, Some(target), Some(witness), exhausted_to));
                }
                Outcome::Done(None) => exhausted_to = target,
                Outcome::OutOfBudget => return Ok(finish(&search, None, None, exhausted_to)),
            }
        }
        if target == top {
            break;
        }
        level = match search.extend_level(&level) {
            Outcome::Done(l) => l,
            Outcome::OutOfBudget => return Ok(finish(&search, None, None, exhausted_to)),
        };
        size = target;
    }
    // r = 1, or the whole cube is the only candidate left
    if params.r == 1 {
        return Ok(finish(&search, Some(1), Some(vec![Vertex::ZERO]), 0));
    }
    if m_max as u64 >= universe && exhausted_to as u64 >= universe - 1 {
        let all: Vec<Vertex> = (0..universe as u128).map(Vertex).collect();
        return Ok(finish(&search, Some(universe as u32), Some(all), exhausted_to));
    }
    Ok(finish(&search, None, None, exhausted_to))
}
