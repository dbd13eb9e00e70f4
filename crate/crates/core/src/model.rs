//! Zero-field Ising models on bounded-degree graphs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math;

/// A spin value, always -1 or +1.
pub type Spin = i8;

/// Simple undirected graph on nodes `0..p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    p: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Pairs are normalized to `i < j`
    /// and stored sorted; self-loops, duplicates and out-of-range nodes are
    /// rejected.
    pub fn new<I>(p: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (a, b) in edges {
            for node in [a, b] {
                if node >= p {
                    return Err(Error::NodeOutOfRange { node, p });
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(alloc::format!("self-loop at node {a}")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(alloc::format!(
                "duplicate edge {{{}, {}}}",
                w[0].0,
                w[0].1
            )));
        }
        let mut adjacency = vec![Vec::new(); p];
        for &(i, j) in &list {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Graph {
            p,
            edges: list,
            adjacency,
        })
    }

    pub fn empty(p: usize) -> Self {
        Graph {
            p,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); p],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Edges as sorted `(i, j)` pairs with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.p && self.adjacency[i].binary_search(&j).is_ok()
    }
}

/// Sparse coupling vector keyed by unordered pair; absent pairs are zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Couplings {
    values: BTreeMap<(usize, usize), f64>,
}

impl Couplings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same coupling on every edge of `graph`.
    pub fn constant(graph: &Graph, theta: f64) -> Self {
        graph.edges().iter().map(|&e| (e, theta)).collect()
    }

    pub fn insert(&mut self, i: usize, j: usize, theta: f64) {
        self.values.insert(key(i, j), theta);
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(&key(i, j)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromIterator<((usize, usize), f64)> for Couplings {
    fn from_iter<T: IntoIterator<Item = ((usize, usize), f64)>>(iter: T) -> Self {
        let mut c = Couplings::new();
        for ((i, j), theta) in iter {
            c.insert(i, j, theta);
        }
        c
    }
}

#[inline]
fn key(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// Declared bounds `alpha <= |theta_ij| <= beta` and maximum degree `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
}

impl ParamBounds {
    pub fn new(alpha: f64, beta: f64, d: usize) -> Self {
        ParamBounds { alpha, beta, d }
    }
}

/// One reason a (graph, couplings, bounds) triple is outside the parameter set.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidBounds {
        alpha: f64,
        beta: f64,
    },
    OffEdgeCoupling {
        i: usize,
        j: usize,
        theta: f64,
    },
    MissingCoupling {
        i: usize,
        j: usize,
    },
    BelowAlpha {
        i: usize,
        j: usize,
        theta: f64,
    },
    AboveBeta {
        i: usize,
        j: usize,
        theta: f64,
    },
    DegreeExceeded {
        node: usize,
        degree: usize,
        d: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::InvalidBounds { alpha, beta } => {
                write!(
                    f,
                    "bounds require 0 < alpha <= beta (alpha = {alpha}, beta = {beta})"
                )
            }
            Violation::OffEdgeCoupling { i, j, theta } => {
                write!(f, "theta_{i}{j} = {theta} on a non-edge")
            }
            Violation::MissingCoupling { i, j } => write!(f, "edge {{{i}, {j}}} has no coupling"),
            Violation::BelowAlpha { i, j, theta } => {
                write!(f, "|theta_{i}{j}| < alpha (theta = {theta})")
            }
            Violation::AboveBeta { i, j, theta } => {
                write!(f, "|theta_{i}{j}| > beta (theta = {theta})")
            }
            Violation::DegreeExceeded { node, degree, d } => {
                write!(f, "node {node} has degree {degree} > d = {d}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (n, v) in self.violations.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every constraint of the parameter set that the input breaks.
/// An empty report means the model is admissible.
pub fn validate_model(
    graph: &Graph,
    couplings: &Couplings,
    bounds: &ParamBounds,
) -> ValidationReport {
    let mut violations = Vec::new();
    let ParamBounds { alpha, beta, d } = *bounds;
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        violations.push(Violation::InvalidBounds { alpha, beta });
    }
    for ((i, j), theta) in couplings.iter() {
        if !graph.has_edge(i, j) && theta != 0.0 {
            violations.push(Violation::OffEdgeCoupling { i, j, theta });
        }
    }
    for &(i, j) in graph.edges() {
        match couplings.values.get(&(i, j)) {
            None => violations.push(Violation::MissingCoupling { i, j }),
            Some(&theta) => {
                if !(theta.abs() >= alpha) {
                    violations.push(Violation::BelowAlpha { i, j, theta });
                } else if !(theta.abs() <= beta) {
                    violations.push(Violation::AboveBeta { i, j, theta });
                }
            }
        }
    }
    for node in 0..graph.p() {
        let degree = graph.degree(node);
        if degree > d {
            violations.push(Violation::DegreeExceeded { node, degree, d });
        }
    }
    ValidationReport { violations }
}

/// A spin configuration in `{-1, +1}^p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig(Vec<Spin>);

impl SpinConfig {
    pub fn new(spins: Vec<Spin>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(i64::from(bad)));
        }
        Ok(SpinConfig(spins))
    }

    pub fn all_plus(p: usize) -> Self {
        SpinConfig(vec![1; p])
    }

    /// Decodes an enumeration index: bit `k` set means node `k` is +1.
    pub fn from_index(index: usize, p: usize) -> Self {
        SpinConfig(
            (0..p)
                .map(|k| if index >> k & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Inverse of [`SpinConfig::from_index`].
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0, |acc, (k, _)| acc | 1 << k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> Spin {
        self.0[i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, s: Spin) {
        debug_assert!(s == 1 || s == -1);
        self.0[i] = s;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| i64::from(s)).sum()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", if s > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

/// An admissible Ising model: graph, couplings in `Omega_{alpha,beta}(G)`,
/// and the declared bounds. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    graph: Graph,
    couplings: Couplings,
    bounds: ParamBounds,
    // neighbor list with the coupling to each neighbor, for O(d) local fields
    weighted: Vec<Vec<(usize, f64)>>,
}

impl IsingModel {
    pub fn new(graph: Graph, couplings: Couplings, bounds: ParamBounds) -> Result<Self> {
        let report = validate_model(&graph, &couplings, &bounds);
        if !report.is_valid() {
            return Err(Error::InvalidModel(report));
        }
        let weighted = (0..graph.p())
            .map(|i| {
                graph
                    .neighbors(i)
                    .iter()
                    .map(|&j| (j, couplings.get(i, j)))
                    .collect()
            })
            .collect();
        Ok(IsingModel {
            graph,
            couplings,
            bounds,
            weighted,
        })
    }

    /// Graph with the same coupling on every edge.
    pub fn uniform(graph: Graph, theta: f64, bounds: ParamBounds) -> Result<Self> {
        let couplings = Couplings::constant(&graph, theta);
        IsingModel::new(graph, couplings, bounds)
    }

    pub fn p(&self) -> usize {
        self.graph.p()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn bounds(&self) -> &ParamBounds {
        &self.bounds
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings.get(i, j)
    }

    /// Neighbors of `i` paired with their couplings.
    pub fn weighted_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.weighted[i]
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.p() {
            return Err(Error::NodeOutOfRange {
                node: i,
                p: self.p(),
            });
        }
        Ok(())
    }

    fn check_config(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.p() {
            return Err(Error::ConfigLength {
                expected: self.p(),
                found: config.len(),
            });
        }
        Ok(())
    }

    /// `sum_{j in N(i)} theta_ij sigma_j`; zero for isolated nodes.
    pub fn local_field(&self, config: &SpinConfig, i: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_config(config)?;
        Ok(self.local_field_unchecked(config.spins(), i))
    }

    #[inline]
    pub(crate) fn local_field_unchecked(&self, spins: &[Spin], i: usize) -> f64 {
        self.weighted[i]
            .iter()
            .map(|&(j, theta)| theta * f64::from(spins[j]))
            .sum()
    }

    /// Probability that an update of node `i` sets it to +1.
    pub fn update_prob_plus(&self, config: &SpinConfig, i: usize) -> Result<f64> {
        Ok(math::heat_bath(self.local_field(config, i)?).0)
    }

    /// Probability that an update of node `i` sets it to -1.
    pub fn update_prob_minus(&self, config: &SpinConfig, i: usize) -> Result<f64> {
        Ok(math::heat_bath(self.local_field(config, i)?).1)
    }
}

/// Floor `1/2 exp(-2 beta d)` on either outcome of a single-site update.
pub fn min_update_prob(beta: f64, d: usize) -> f64 {
    0.5 * math::exp(-2.0 * beta * d as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn single_edge(theta: f64, alpha: f64, beta: f64) -> (Graph, Couplings, ParamBounds) {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let c = Couplings::constant(&g, theta);
        (g, c, ParamBounds::new(alpha, beta, 1))
    }

    #[test]
    fn validate_accepts_admissible_edge() {
        let (g, c, b) = single_edge(0.5, 0.1, 1.0);
        assert!(validate_model(&g, &c, &b).is_valid());
    }

    #[test]
    fn validate_flags_weak_coupling() {
        let (g, c, b) = single_edge(0.05, 0.1, 1.0);
        let report = validate_model(&g, &c, &b);
        assert_eq!(
            report.violations,
            vec![Violation::BelowAlpha {
                i: 0,
                j: 1,
                theta: 0.05
            }]
        );
        assert!(alloc::format!("{report}").contains("|theta_01| < alpha"));
    }

    #[test]
    fn validate_flags_every_degree_violation() {
        let g = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = Couplings::constant(&g, 0.5);
        let report = validate_model(&g, &c, &ParamBounds::new(0.1, 1.0, 1));
        let degree_nodes: Vec<usize> = report
            .violations
            .iter()
            .filter_map(|v| match v {
                Violation::DegreeExceeded {
                    node,
                    degree: 2,
                    d: 1,
                } => Some(*node),
                _ => None,
            })
            .collect();
        assert_eq!(degree_nodes, vec![0, 1, 2]);
    }

    #[test]
    fn validate_flags_off_edge_and_missing() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let mut c = Couplings::new();
        c.insert(1, 2, 0.4);
        let report = validate_model(&g, &c, &ParamBounds::new(0.1, 1.0, 2));
        assert_eq!(report.violations.len(), 2);
        assert!(report
            .violations
            .contains(&Violation::MissingCoupling { i: 0, j: 1 }));
        assert!(report.violations.contains(&Violation::OffEdgeCoupling {
            i: 1,
            j: 2,
            theta: 0.4
        }));
    }

    #[test]
    fn graph_rejects_bad_input() {
        assert!(matches!(
            Graph::new(3, [(1, 1)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, [(0, 1), (1, 0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::new(3, [(0, 3)]),
            Err(Error::NodeOutOfRange { node: 3, p: 3 })
        ));
    }

    #[test]
    fn local_field_examples() {
        let g = Graph::new(3, [(0, 1), (0, 2)]).unwrap();
        let mut c = Couplings::new();
        c.insert(0, 1, 0.5);
        c.insert(0, 2, -0.5);
        let m = IsingModel::new(g, c, ParamBounds::new(0.5, 0.5, 2)).unwrap();
        let plus = SpinConfig::all_plus(3);
        assert_eq!(m.local_field(&plus, 0).unwrap(), 0.0);
        assert_eq!(m.local_field(&plus, 1).unwrap(), 0.5);

        let isolated = IsingModel::new(
            Graph::empty(2),
            Couplings::new(),
            ParamBounds::new(0.1, 1.0, 0),
        )
        .unwrap();
        assert_eq!(
            isolated.local_field(&SpinConfig::all_plus(2), 1).unwrap(),
            0.0
        );
        assert_eq!(
            isolated
                .update_prob_plus(&SpinConfig::all_plus(2), 1)
                .unwrap(),
            0.5
        );
        assert!(matches!(
            isolated.local_field(&SpinConfig::all_plus(2), 2),
            Err(Error::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn update_prob_single_neighbor() {
        let (g, c, b) = single_edge(0.5, 0.1, 1.0);
        let m = IsingModel::new(g, c, b).unwrap();
        let p = m.update_prob_plus(&SpinConfig::all_plus(2), 0).unwrap();
        assert_abs_diff_eq!(p, 0.7310586, epsilon = 1e-7);
    }

    #[test]
    fn min_update_prob_values() {
        assert_eq!(min_update_prob(0.0, 7), 0.5);
        assert_abs_diff_eq!(min_update_prob(0.5, 1), 0.1839397, epsilon = 1e-7);
        assert_abs_diff_eq!(min_update_prob(1.0, 3), 0.0012394, epsilon = 1e-7);
        assert_abs_diff_eq!(min_update_prob(1.0, 2), 0.0091578, epsilon = 1e-7);
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..64 {
            assert_eq!(SpinConfig::from_index(idx, 6).to_index(), idx);
        }
        assert!(SpinConfig::new(alloc::vec![1, 0]).is_err());
    }
}
