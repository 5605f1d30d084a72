//! Closed-form percolation predicates.
//!
//! For `r = 2` the process percolates iff two seeds lie within distance
//! `2k`; for `r = 3` (and `k >= 2`) iff three seeds are pairwise within
//! `2k`. For `r >= 4` the analogous condition is not sufficient, and
//! [`r4_counterexample`] builds the witness set.
//!
//! The predicates work on plain point slices so they apply for `n` up to
//! 128, far beyond what the dense engine can hold.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cube::{hamming_distance, GraphParams, NeighborMasks, Vertex, VertexSet};
use crate::error::{Error, Result};

/// Below this many points the close-pair search is a plain quadratic scan.
pub const BUCKET_THRESHOLD: usize = 512;

/// Pairwise distances `(d12, d13, d23)` of a vertex triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TriangleShape {
    pub d12: u32,
    pub d13: u32,
    pub d23: u32,
}

impl TriangleShape {
    pub fn new(d12: u32, d13: u32, d23: u32) -> Result<Self> {
        let s = TriangleShape { d12, d13, d23 };
        if d12 == 0 || d13 == 0 || d23 == 0 {
            return Err(Error::param("triangle sides must be positive"));
        }
        if d12 > d13 + d23 || d13 > d12 + d23 || d23 > d12 + d13 {
            return Err(Error::param("triangle inequality violated"));
        }
        if !(d12 + d13 + d23).is_multiple_of(2) {
            return Err(Error::param("perimeter of a Hamming triangle is even"));
        }
        Ok(s)
    }

    pub fn of(x: Vertex, y: Vertex, z: Vertex) -> Self {
        TriangleShape {
            d12: hamming_distance(x, y),
            d13: hamming_distance(x, z),
            d23: hamming_distance(y, z),
        }
    }

    /// Sides sorted ascending, the orbit label under relabelling the triple.
    pub fn sorted(self) -> Self {
        let mut d = [self.d12, self.d13, self.d23];
        d.sort_unstable();
        TriangleShape { d12: d[0], d13: d[1], d23: d[2] }
    }

    pub fn max_side(self) -> u32 {
        self.d12.max(self.d13).max(self.d23)
    }

    /// `(a1, a2, a3)`: coordinates where only `x2`, both, or only `x3`
    /// differ from `x1`.
    pub fn decomposition(self) -> (u32, u32, u32) {
        let a1 = (self.d12 + self.d23 - self.d13) / 2;
        let a2 = (self.d12 + self.d13 - self.d23) / 2;
        let a3 = (self.d13 + self.d23 - self.d12) / 2;
        (a1, a2, a3)
    }

    /// A concrete triple `(0, 1^{a1+a2}, 0^{a1} 1^{a2+a3})` realising the shape.
    pub fn realize(self) -> [Vertex; 3] {
        let (a1, a2, a3) = self.decomposition();
        [Vertex::ZERO, Vertex::run(0, a1 + a2), Vertex::run(a1, a2 + a3)]
    }

    /// Dimension needed by [`TriangleShape::realize`].
    pub fn min_dimension(self) -> u32 {
        let (a1, a2, a3) = self.decomposition();
        a1 + a2 + a3
    }

    /// Every sorted shape with sides at most `max_side`.
    pub fn all(max_side: u32) -> Vec<TriangleShape> {
        let mut out = Vec::new();
        for a in 1..=max_side {
            for b in a..=max_side {
                for c in b..=max_side {
                    if let Ok(s) = TriangleShape::new(a, b, c) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }
}

/// Every unordered pair of `points` at distance `1..=radius`, as index pairs
/// `(i, j)` with `i < j`, sorted.
pub fn close_pairs(points: &[Vertex], n: u32, radius: u32) -> Vec<(usize, usize)> {
    let mut pairs = if points.len() < BUCKET_THRESHOLD || n <= radius {
        quadratic_pairs(points, radius)
    } else {
        bucketed_pairs(points, n, radius)
    };
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

fn quadratic_pairs(points: &[Vertex], radius: u32) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = hamming_distance(points[i], points[j]);
            if d >= 1 && d <= radius {
                out.push((i, j));
            }
        }
    }
    out
}

/// Pigeonhole bucketing: split the coordinates into `radius + 1` blocks.
/// Two points at distance `<= radius` agree exactly on at least one block,
/// so candidates only need to be compared within a shared block value.
fn bucketed_pairs(points: &[Vertex], n: u32, radius: u32) -> Vec<(usize, usize)> {
    let blocks = radius + 1;
    let mut out = Vec::new();
    for b in 0..blocks {
        let start = b * n / blocks;
        let end = (b + 1) * n / blocks;
        if end == start {
            continue;
        }
        let mask = Vertex::run(start, end - start).0;
        let mut buckets: HashMap<u128, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(p.0 & mask).or_default().push(i);
        }
        for members in buckets.values() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    let d = hamming_distance(points[i], points[j]);
                    if d >= 1 && d <= radius {
                        out.push((i.min(j), i.max(j)));
                    }
                }
            }
        }
    }
    out
}

fn dimension_of(points: &[Vertex]) -> u32 {
    points
        .iter()
        .map(|p| 128 - p.0.leading_zeros())
        .max()
        .unwrap_or(0)
}

/// True iff some unordered pair of distinct points lies within distance `2k`.
pub fn pair_condition(points: &[Vertex], k: u32) -> bool {
    let n = dimension_of(points);
    let radius = 2 * k;
    if points.len() < BUCKET_THRESHOLD || n <= radius {
        return points.iter().enumerate().any(|(i, &p)| {
            points[i + 1..].iter().any(|&q| {
                let d = hamming_distance(p, q);
                d >= 1 && d <= radius
            })
        });
    }
    !bucketed_pairs(points, n, radius).is_empty()
}

/// True iff some three distinct points are pairwise within distance `2k`.
/// Only proved to characterise 3-neighbour percolation for `k >= 2`.
pub fn triple_condition(points: &[Vertex], k: u32) -> Result<bool> {
    if k < 2 {
        return Err(Error::param("the triple condition is only characterised for k >= 2"));
    }
    Ok(find_triangle(points, k).is_some())
}

/// A triple of indices into `points` with all pairwise distances `<= 2k`.
pub fn find_triangle(points: &[Vertex], k: u32) -> Option<[usize; 3]> {
    let n = dimension_of(points);
    let pairs = close_pairs(points, n, 2 * k);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for &(i, j) in &pairs {
        adj[i].push(j);
    }
    // adjacency lists hold only larger indices and are sorted
    for &(i, j) in &pairs {
        let (a, b) = (&adj[i], &adj[j]);
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => return Some([i, j, a[x]]),
            }
        }
    }
    None
}

/// Oracle verdict for `r in {2, 3}` on a dense set.
pub fn predicts_percolation(a0: &VertexSet, params: &GraphParams) -> Result<bool> {
    let points = a0.to_vec();
    oracle_verdict(&points, params)
}

/// Oracle verdict for `r in {2, 3}` on a point list.
pub fn oracle_verdict(points: &[Vertex], params: &GraphParams) -> Result<bool> {
    match params.r {
        2 => Ok(pair_condition(points, params.k)),
        3 => triple_condition(points, params.k),
        r => Err(Error::Refused(format!(
            "no closed-form percolation criterion for r={r}; only r=2 and r=3 are characterised"
        ))),
    }
}

/// `{x_1, ..., x_{r-1}, 0^n}` with `x_i` the `i`-th block of `k` ones.
/// Pairwise distances are at most `2k` yet the `r`-process stalls.
pub fn r4_counterexample(params: &GraphParams) -> Result<VertexSet> {
    let points = r4_counterexample_points(params)?;
    VertexSet::from_vertices(params.n, points)
}

pub fn r4_counterexample_points(params: &GraphParams) -> Result<Vec<Vertex>> {
    let GraphParams { n, k, r } = *params;
    if r < 4 {
        return Err(Error::param(format!("counterexample needs r >= 4, got r={r}")));
    }
    if (r as u64) * (k as u64) > n as u64 {
        return Err(Error::param(format!("counterexample needs r*k <= n, got r={r} k={k} n={n}")));
    }
    let mut points: Vec<Vertex> = (1..r).map(|i| Vertex::run((i - 1) * k, k)).collect();
    points.push(Vertex::ZERO);
    Ok(points)
}

/// True iff no vertex is a neighbour (distance `1..=k`) of every point.
pub fn common_neighborhood_empty(points: &[Vertex], params: &GraphParams) -> Result<bool> {
    params.check_dense()?;
    let Some(&first) = points.first() else {
        return Ok(false);
    };
    if let Some(bad) = points.iter().find(|p| !p.fits(params.n)) {
        return Err(Error::param(format!("vertex {:#x} does not fit in n={}", bad.0, params.n)));
    }
    let masks = NeighborMasks::new(params.n, params.k)?;
    let common = masks.as_slice().iter().map(|&m| Vertex(first.0 ^ m as u128)).any(|y| {
        points.iter().all(|&x| {
            let d = hamming_distance(x, y);
            d >= 1 && d <= params.k
        })
    });
    Ok(!common)
}
