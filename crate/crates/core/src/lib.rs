//! Bootstrap percolation on the distance-k augmented hypercube `Q_{n,k}`.
//!
//! The vertex set is `{0,1}^n` and two vertices are adjacent when their
//! Hamming distance lies in `1..=k`. A healthy vertex becomes infected once
//! at least `r` of its neighbours are infected; infection is permanent.
//!
//! Modules:
//! - [`cube`]: vertex arithmetic, dense vertex sets, neighbourhoods.
//! - [`engine`]: exact synchronous closure and stall certificates.
//! - [`oracle`]: closed-form percolation predicates for `r = 2, 3`.
//! - [`construct`]: explicit percolating sets and blocker certificates.
//! - [`mc`]: Monte Carlo estimation of percolation probability and `p_c`.
//! - [`solver`]: exact minimum contagious sets for small `n`.

pub mod construct;
pub mod cube;
pub mod engine;
mod error;
pub mod mc;
pub mod oracle;
pub mod report;
pub mod solver;

pub use crate::construct::{BlockerSpec, LayerMode};
pub use crate::cube::{GraphParams, Vertex, VertexSet, N_MAX_DENSE};
pub use crate::engine::{closure, percolates, ProcessResult};
pub use crate::error::{Error, Result};
pub use crate::mc::{Backend, Estimate, PcResult, Seed, SparsePointList};
pub use crate::oracle::TriangleShape;
pub use crate::solver::{MinSetResult, SearchBudget};

/// Default master seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;
