//! Vertex arithmetic and neighbourhood combinatorics of `Q_{n,k}`.
//!
//! Coordinate `i` of a vertex is bit `i` of its label, and coordinate 0 is
//! the leftmost character of the textual form: `"110000"` has bits 0 and 1
//! set.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which a dense `2^n`-bit vertex set is materialised.
pub const N_MAX_DENSE: u32 = 28;

/// Largest dimension supported by [`Vertex`] labels and sparse point lists.
pub const N_MAX_SPARSE: u32 = 128;

/// The triple `(n, k, r)`: dimension, maximum edge distance, threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphParams {
    pub n: u32,
    pub k: u32,
    pub r: u32,
}

impl GraphParams {
    pub fn new(n: u32, k: u32, r: u32) -> Result<Self> {
        if n == 0 || n > N_MAX_SPARSE {
            return Err(Error::param(format!("n={n} must lie in 1..={N_MAX_SPARSE}")));
        }
        if k == 0 || k > n {
            return Err(Error::param(format!("k={k} must lie in 1..=n (n={n})")));
        }
        if r == 0 {
            return Err(Error::param("r must be at least 1"));
        }
        Ok(GraphParams { n, k, r })
    }

    /// Fails with [`Error::Capacity`] unless `n <= limit`.
    pub fn check_dense_with(&self, limit: u32) -> Result<()> {
        check_dense(self.n, limit)
    }

    pub fn check_dense(&self) -> Result<()> {
        check_dense(self.n, N_MAX_DENSE)
    }

    /// Degree of every vertex.
    pub fn degree(&self) -> u128 {
        // k <= n holds by construction
        ball_size(self.n, self.k).expect("validated params")
    }

    /// Number of vertices, `2^n`, for dense dimensions.
    pub fn order(&self) -> usize {
        1usize << self.n
    }

    pub fn with_r(&self, r: u32) -> Result<Self> {
        GraphParams::new(self.n, self.k, r)
    }

    pub fn with_k(&self, k: u32) -> Result<Self> {
        GraphParams::new(self.n, k, self.r)
    }
}

pub(crate) fn check_dense(n: u32, limit: u32) -> Result<()> {
    if n > limit.min(usize::BITS - 2) {
        Err(Error::Capacity { n, limit })
    } else {
        Ok(())
    }
}

/// A vertex of the cube, stored as a bitmask label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Vertex(pub u128);

impl Vertex {
    pub const ZERO: Vertex = Vertex(0);

    pub fn label(self) -> u128 {
        self.0
    }

    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Vertex whose first `len` coordinates are 1 starting at coordinate `start`.
    pub fn run(start: u32, len: u32) -> Vertex {
        if len == 0 {
            return Vertex(0);
        }
        let ones = if len >= 128 { u128::MAX } else { (1u128 << len) - 1 };
        Vertex(ones << start)
    }

    pub fn unit(i: u32) -> Vertex {
        Vertex(1u128 << i)
    }

    pub fn fits(self, n: u32) -> bool {
        n >= 128 || self.0 >> n == 0
    }

    /// Parses a binary string of length `n` (coordinate 0 leftmost), or a
    /// `0x`-prefixed hexadecimal label.
    pub fn parse(text: &str, n: u32) -> Result<Vertex> {
        let text = text.trim();
        let err = |reason: &str| Error::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let v = if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
            Vertex(u128::from_str_radix(hex, 16).map_err(|e| err(&e.to_string()))?)
        } else {
            if text.len() != n as usize {
                return Err(err(&format!("expected {n} binary digits, got {}", text.len())));
            }
            let mut label = 0u128;
            for (i, c) in text.bytes().enumerate() {
                match c {
                    b'0' => {}
                    b'1' => label |= 1u128 << i,
                    _ => return Err(err("only '0' and '1' are allowed")),
                }
            }
            Vertex(label)
        };
        if !v.fits(n) {
            return Err(err(&format!("label does not fit in {n} coordinates")));
        }
        Ok(v)
    }

    pub fn to_bit_string(self, n: u32) -> String {
        (0..n)
            .map(|i| if self.0 >> i & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    /// Image under the coordinate permutation sending coordinate `i` to `perm[i]`.
    pub fn permute(self, perm: &[u32]) -> Vertex {
        let mut out = 0u128;
        for (i, &target) in perm.iter().enumerate() {
            if self.0 >> i & 1 == 1 {
                out |= 1u128 << target;
            }
        }
        Vertex(out)
    }
}

impl std::ops::BitXor for Vertex {
    type Output = Vertex;
    fn bitxor(self, rhs: Vertex) -> Vertex {
        Vertex(self.0 ^ rhs.0)
    }
}

pub fn hamming_distance(u: Vertex, v: Vertex) -> u32 {
    (u.0 ^ v.0).count_ones()
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for i in 1..=k as u128 {
        let top = (n as u128) - (k as u128) + i;
        let g = gcd(c, i);
        let (c_red, i_red) = (c / g, i / g);
        match c_red.checked_mul(top / i_red) {
            Some(v) => c = v,
            None => return u128::MAX,
        }
    }
    c
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `sum_{i=1..k} C(n, i)`, the degree of every vertex of `Q_{n,k}`.
pub fn ball_size(n: u32, k: u32) -> Result<u128> {
    if k < 1 || k > n {
        return Err(Error::param(format!("ball_size needs 1 <= k <= n, got n={n} k={k}")));
    }
    Ok((1..=k).fold(0u128, |acc, i| acc.saturating_add(binomial(n as u64, i as u64))))
}

/// All XOR masks of Hamming weight `1..=k` on `n` coordinates, grouped by
/// weight and ascending within each weight.
#[derive(Debug, Clone)]
pub struct NeighborMasks {
    masks: Vec<u32>,
}

impl NeighborMasks {
    pub fn new(n: u32, k: u32) -> Result<Self> {
        check_dense(n, N_MAX_DENSE)?;
        ball_size(n, k)?;
        let mut masks = Vec::new();
        for w in 1..=k {
            masks.extend(masks_of_weight(n, w));
        }
        Ok(NeighborMasks { masks })
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.masks
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }
}

/// Every `n`-bit word with exactly `w` ones, ascending (Gosper's hack).
pub(crate) fn masks_of_weight(n: u32, w: u32) -> impl Iterator<Item = u32> {
    let limit: u64 = 1u64 << n;
    let mut next: Option<u64> = if w > n {
        None
    } else if w == 0 {
        Some(0)
    } else {
        Some((1u64 << w) - 1)
    };
    std::iter::from_fn(move || {
        let cur = next?;
        if cur >= limit {
            return None;
        }
        next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            Some((((r ^ cur) >> 2) / c) | r)
        };
        Some(cur as u32)
    })
}

/// Neighbours of `v`: every vertex at distance `1..=k`, each exactly once.
pub fn neighbors(v: Vertex, params: &GraphParams) -> Result<impl Iterator<Item = Vertex>> {
    let masks = NeighborMasks::new(params.n, params.k)?;
    Ok(masks.masks.into_iter().map(move |m| Vertex(v.0 ^ m as u128)))
}

/// Dense membership vector over all `2^n` vertices with a cached count.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    n: u32,
    words: Vec<u64>,
    count: usize,
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = self.iter().take(16).map(|v| v.to_bit_string(self.n)).collect();
        f.debug_struct("VertexSet")
            .field("n", &self.n)
            .field("count", &self.count)
            .field("first", &shown)
            .finish()
    }
}

impl VertexSet {
    pub fn empty(n: u32) -> Result<Self> {
        Self::empty_with_limit(n, N_MAX_DENSE)
    }

    pub fn empty_with_limit(n: u32, limit: u32) -> Result<Self> {
        check_dense(n, limit)?;
        let bits = 1usize << n;
        Ok(VertexSet {
            n,
            words: vec![0; bits.div_ceil(64)],
            count: 0,
        })
    }

    pub fn full(n: u32) -> Result<Self> {
        let mut s = Self::empty(n)?;
        s.fill();
        Ok(s)
    }

    pub fn from_vertices(n: u32, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut s = Self::empty(n)?;
        for v in vertices {
            if !v.fits(n) {
                return Err(Error::param(format!("vertex {:#x} does not fit in n={n}", v.0)));
            }
            s.insert(v);
        }
        Ok(s)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Number of vertices in the ambient cube.
    pub fn universe(&self) -> usize {
        1usize << self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn is_full(&self) -> bool {
        self.count == self.universe()
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        v.fits(self.n) && self.contains_index(v.0 as usize)
    }

    #[inline]
    pub(crate) fn contains_index(&self, i: usize) -> bool {
        self.words[i >> 6] >> (i & 63) & 1 == 1
    }

    /// Returns true if `v` was not already present. Panics if `v` is out of range.
    pub fn insert(&mut self, v: Vertex) -> bool {
        assert!(v.fits(self.n), "vertex out of range for n={}", self.n);
        self.insert_index(v.0 as usize)
    }

    #[inline]
    pub(crate) fn insert_index(&mut self, i: usize) -> bool {
        let word = &mut self.words[i >> 6];
        let bit = 1u64 << (i & 63);
        if *word & bit == 0 {
            *word |= bit;
            self.count += 1;
            true
        } else {
            false
        }
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        if !self.contains(v) {
            return false;
        }
        let i = v.0 as usize;
        self.words[i >> 6] &= !(1u64 << (i & 63));
        self.count -= 1;
        true
    }

    fn fill(&mut self) {
        let bits = self.universe();
        for w in self.words.iter_mut() {
            *w = u64::MAX;
        }
        if !bits.is_multiple_of(64) {
            *self.words.last_mut().unwrap() = (1u64 << (bits % 64)) - 1;
        }
        self.count = bits;
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.indices().map(|i| Vertex(i as u128))
    }

    pub(crate) fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }

    pub fn complement(&self) -> VertexSet {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        let bits = self.universe();
        if !bits.is_multiple_of(64) {
            *out.words.last_mut().unwrap() &= (1u64 << (bits % 64)) - 1;
        }
        out.count = bits - self.count;
        out
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let words: Vec<u64> = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        let count = words.iter().map(|w| w.count_ones() as usize).sum();
        VertexSet { n: self.n, words, count }
    }

    pub fn is_subset_of(&self, other: &VertexSet) -> bool {
        self.n == other.n && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// `{v ^ t : v in self}`.
    pub fn translate(&self, t: Vertex) -> VertexSet {
        let mut out = VertexSet { n: self.n, words: vec![0; self.words.len()], count: 0 };
        for v in self.iter() {
            out.insert(v ^ t);
        }
        out
    }

    /// Image under a coordinate permutation (`perm[i]` is the new position of coordinate `i`).
    pub fn permute(&self, perm: &[u32]) -> VertexSet {
        assert_eq!(perm.len(), self.n as usize, "permutation length must equal n");
        let mut out = VertexSet { n: self.n, words: vec![0; self.words.len()], count: 0 };
        for v in self.iter() {
            out.insert(v.permute(perm));
        }
        out
    }
}

/// `V_j`: all vertices of Hamming weight `j`.
pub fn weight_layer(n: u32, j: u32) -> Result<VertexSet> {
    if j > n {
        return Err(Error::param(format!("layer j={j} out of range 0..={n}")));
    }
    let mut s = VertexSet::empty(n)?;
    for m in masks_of_weight(n, j) {
        s.insert_index(m as usize);
    }
    Ok(s)
}

/// `{base ^ s : s ⊆ free}`.
pub fn subcube_vertices(free: Vertex, base: Vertex, n: u32) -> Result<VertexSet> {
    if free.0 & base.0 != 0 {
        return Err(Error::param("subcube base overlaps the free coordinates"));
    }
    if !free.fits(n) || !base.fits(n) {
        return Err(Error::param(format!("subcube masks do not fit in n={n}")));
    }
    let mut s = VertexSet::empty(n)?;
    let free = free.0 as usize;
    let base = base.0 as usize;
    let mut sub = free;
    loop {
        s.insert_index(base | sub);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s, s.len() as u32).unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(Vertex(0b0000), Vertex(0b1111)), 4);
        assert_eq!(hamming_distance(Vertex(0b1010), Vertex(0b1010)), 0);
        assert_eq!(hamming_distance(Vertex(0b0011), Vertex(0b0101)), 2);
    }

    #[test]
    fn ball_size_examples() {
        assert_eq!(ball_size(4, 2).unwrap(), 10);
        assert_eq!(ball_size(6, 3).unwrap(), 41);
        for n in 1..=20 {
            assert_eq!(ball_size(n, n).unwrap(), (1u128 << n) - 1);
        }
        assert_eq!(ball_size(128, 128).unwrap(), u128::MAX);
        assert!(ball_size(4, 5).is_err());
        assert!(ball_size(4, 0).is_err());
    }

    #[test]
    fn binomial_large() {
        assert_eq!(binomial(128, 64), 23_951_146_041_928_082_866_135_587_776_380_551_750);
        assert_eq!(binomial(10, 3), 120);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn neighbor_examples() {
        let p = GraphParams::new(2, 2, 1).unwrap();
        let mut got: Vec<u128> = neighbors(Vertex(0), &p).unwrap().map(|v| v.0).collect();
        got.sort();
        assert_eq!(got, vec![0b01, 0b10, 0b11]);

        let p = GraphParams::new(4, 1, 1).unwrap();
        let got: Vec<u128> = neighbors(Vertex(0), &p).unwrap().map(|v| v.0).collect();
        assert_eq!(got, vec![1, 2, 4, 8]);

        let p = GraphParams::new(4, 2, 1).unwrap();
        assert_eq!(neighbors(Vertex(5), &p).unwrap().count(), 10);
    }

    #[test]
    fn neighbor_symmetry_exhaustive() {
        for n in 1..=10 {
            for k in 1..=n.min(4) {
                let masks = NeighborMasks::new(n, k).unwrap();
                assert_eq!(masks.len() as u128, ball_size(n, k).unwrap());
                for &m in masks.as_slice() {
                    assert_ne!(m, 0);
                    let w = m.count_ones();
                    assert!((1..=k).contains(&w));
                }
                // symmetric because the mask set is closed under XOR-translation
                let mut sorted = masks.as_slice().to_vec();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), masks.len());
            }
        }
    }

    #[test]
    fn weight_layers() {
        assert_eq!(weight_layer(4, 0).unwrap().to_vec(), vec![Vertex(0)]);
        assert_eq!(weight_layer(4, 2).unwrap().len(), 6);
        assert_eq!(weight_layer(4, 4).unwrap().to_vec(), vec![Vertex(0b1111)]);
        assert!(weight_layer(4, 5).is_err());
        for n in 1..=12 {
            let total: usize = (0..=n).map(|j| weight_layer(n, j).unwrap().len()).sum();
            assert_eq!(total, 1 << n);
        }
    }

    #[test]
    fn subcubes() {
        let s = subcube_vertices(Vertex(0b0011), Vertex(0), 4).unwrap();
        assert_eq!(s.to_vec(), vec![Vertex(0), Vertex(1), Vertex(2), Vertex(3)]);
        let s = subcube_vertices(Vertex(0), Vertex(0b1010), 4).unwrap();
        assert_eq!(s.to_vec(), vec![Vertex(0b1010)]);
        let s = subcube_vertices(Vertex(0b0110), Vertex(0b1000), 4).unwrap();
        assert_eq!(s.to_vec(), vec![Vertex(8), Vertex(10), Vertex(12), Vertex(14)]);
        assert!(subcube_vertices(Vertex(0b0110), Vertex(0b0100), 4).is_err());
    }

    #[test]
    fn text_encoding() {
        assert_eq!(v("110000").0, 0b11);
        assert_eq!(Vertex(0b11).to_bit_string(6), "110000");
        assert_eq!(Vertex::parse("0x3", 6).unwrap(), Vertex(3));
        assert!(Vertex::parse("0x40", 6).is_err());
        assert!(Vertex::parse("1100", 6).is_err());
        assert!(Vertex::parse("11002a", 6).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(GraphParams::new(4, 0, 1).is_err());
        assert!(GraphParams::new(4, 5, 1).is_err());
        assert!(GraphParams::new(4, 2, 0).is_err());
        let p = GraphParams::new(40, 2, 2).unwrap();
        assert_eq!(p.check_dense(), Err(Error::Capacity { n: 40, limit: 28 }));
        assert!(p.check_dense_with(40).is_err() || usize::BITS > 42);
        assert!(VertexSet::empty(29).is_err());
    }

    #[test]
    fn set_algebra() {
        let a = VertexSet::from_vertices(5, [Vertex(1), Vertex(7), Vertex(31)]).unwrap();
        let c = a.complement();
        assert_eq!(c.len(), 29);
        assert!(!c.contains(Vertex(7)));
        assert!(a.union(&c).is_full());
        assert!(a.is_subset_of(&a.union(&c)));
        let t = a.translate(Vertex(1));
        assert_eq!(t.to_vec(), vec![Vertex(0), Vertex(6), Vertex(30)]);
        let p = a.permute(&[4, 3, 2, 1, 0]);
        assert_eq!(p.to_vec(), vec![Vertex(0b11100), Vertex(0b11111), Vertex(0b10000)].into_iter().collect::<std::collections::BTreeSet<_>>().into_iter().collect::<Vec<_>>());
        let full = VertexSet::full(3).unwrap();
        assert_eq!(full.len(), 8);
        assert_eq!(full.complement().len(), 0);
    }
}
