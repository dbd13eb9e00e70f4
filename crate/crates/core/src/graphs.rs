//! Graph families used by experiments.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Graph;

pub fn single_edge(p: usize) -> Result<Graph> {
    if p < 2 {
        return Err(Error::Infeasible(format!(
            "single edge needs p >= 2, got {p}"
        )));
    }
    Graph::new(p, [(0, 1)])
}

pub fn path(p: usize) -> Result<Graph> {
    Graph::new(p, (1..p).map(|i| (i - 1, i)))
}

pub fn cycle(p: usize) -> Result<Graph> {
    if p < 3 {
        return Err(Error::Infeasible(format!("cycle needs p >= 3, got {p}")));
    }
    Graph::new(p, (0..p).map(|i| (i, (i + 1) % p)))
}

/// `rows x cols` lattice, row-major node numbering.
pub fn grid(rows: usize, cols: usize) -> Result<Graph> {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

/// Disjoint cliques of size `size` on the first `size * floor(p / size)`
/// nodes; leftover nodes are isolated.
pub fn disjoint_cliques(p: usize, size: usize) -> Result<Graph> {
    if size == 0 {
        return Err(Error::Infeasible("clique size must be positive".into()));
    }
    let mut edges = Vec::new();
    for c in 0..p / size {
        let base = c * size;
        for a in 0..size {
            for b in a + 1..size {
                edges.push((base + a, base + b));
            }
        }
    }
    Graph::new(p, edges)
}

const PAIRING_ATTEMPTS: usize = 100_000;

/// Uniform random `d`-regular simple graph by the pairing (configuration)
/// model: `p * d` half-edges are matched uniformly and the matching is
/// rejected if it creates a self-loop or a repeated edge.
pub fn random_regular<R: Rng + ?Sized>(p: usize, d: usize, rng: &mut R) -> Result<Graph> {
    if (p * d) % 2 == 1 {
        return Err(Error::Infeasible(format!(
            "p * d must be even (p = {p}, d = {d})"
        )));
    }
    if d > 0 && d >= p {
        return Err(Error::Infeasible(format!(
            "d = {d} requires p > d, got p = {p}"
        )));
    }
    let mut points: Vec<usize> = (0..p).flat_map(|v| core::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..PAIRING_ATTEMPTS {
        points.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = points
            .chunks_exact(2)
            .map(|c| (c[0].min(c[1]), c[0].max(c[1])))
            .collect();
        if edges.iter().any(|&(a, b)| a == b) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue 'attempt;
        }
        return Graph::new(p, edges);
    }
    Err(Error::Infeasible(format!(
        "no simple {d}-regular pairing found on {p} nodes after {PAIRING_ATTEMPTS} attempts"
    )))
}
