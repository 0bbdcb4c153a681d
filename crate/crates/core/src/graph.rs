//! Nearest-neighbor graphs over point clouds.
//!
//! Graphs are undirected. Edges are stored once with `i < j`, sorted
//! lexicographically, and every node keeps a sorted neighbor list that
//! mirrors the edge list exactly.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Sampled ambient points, optionally paired with latent parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    latent: Option<Vec<Vec<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate(&points)?;
        Ok(Self {
            points,
            latent: None,
        })
    }

    pub fn with_latent(points: Vec<Vec<f64>>, latent: Vec<Vec<f64>>) -> Result<Self> {
        Self::validate(&points)?;
        if latent.len() != points.len() {
            return Err(Error::invalid(format!(
                "latent parameter count {} does not match point count {}",
                latent.len(),
                points.len()
            )));
        }
        Ok(Self {
            points,
            latent: Some(latent),
        })
    }

    fn validate(points: &[Vec<f64>]) -> Result<()> {
        if points.len() < 2 {
            return Err(Error::invalid("a point cloud needs at least 2 points"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::invalid("points must have dimension >= 1"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::invalid(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("point {i} has a non-finite coordinate")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn latent(&self) -> Option<&[Vec<f64>]> {
        self.latent.as_deref()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(&self.points[i], &self.points[j])
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub cost: f64,
}

/// Undirected weighted graph with per-node neighbor sets.
#[derive(Debug, Clone, PartialEq)]
pub struct NNGraph {
    n: usize,
    edges: Vec<Edge>,
    // (neighbor, edge index), sorted by neighbor
    incident: Vec<Vec<(usize, usize)>>,
}

impl NNGraph {
    /// Builds a graph from an undirected edge list. Endpoint order within a
    /// triple does not matter; self-loops and duplicate pairs are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut list: Vec<Edge> = Vec::new();
        for (a, b, cost) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !(cost >= 0.0 && cost.is_finite()) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) has invalid cost {cost}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            list.push(Edge { i, j, cost });
        }
        list.sort_by_key(|e| (e.i, e.j));
        if let Some(w) = list.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].i, w[0].j
            )));
        }
        Ok(Self::from_sorted(n, list))
    }

    fn from_sorted(n: usize, edges: Vec<Edge>) -> Self {
        let mut incident = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            incident[e.i].push((e.j, idx));
            incident[e.j].push((e.i, idx));
        }
        for list in &mut incident {
            list.sort_unstable();
        }
        Self { n, edges, incident }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> Edge {
        self.edges[idx]
    }

    pub fn costs(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.cost).collect()
    }

    pub fn degree(&self, k: usize) -> usize {
        self.incident[k].len()
    }

    /// `(neighbor, edge index)` pairs for node `k`, sorted by neighbor.
    pub fn incident(&self, k: usize) -> &[(usize, usize)] {
        &self.incident[k]
    }

    /// Sorted neighbor set of node `k`.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.incident[k].iter().map(|&(m, _)| m)
    }

    pub fn neighbor_sets(&self) -> Vec<Vec<usize>> {
        (0..self.n).map(|k| self.neighbors(k).collect()).collect()
    }

    /// Index of the undirected edge `{a, b}` if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&(i, j)))
            .ok()
    }

    pub fn max_cost(&self) -> f64 {
        self.edges.iter().map(|e| e.cost).fold(0.0, f64::max)
    }

    /// Graph with the listed edges removed. Node ids are preserved.
    pub fn without_edges(&self, removed: &BTreeSet<(usize, usize)>) -> NNGraph {
        let kept = self
            .edges
            .iter()
            .filter(|e| !removed.contains(&(e.i, e.j)))
            .copied()
            .collect();
        Self::from_sorted(self.n, kept)
    }

    /// Induced subgraph on `nodes` (given in the new order). Returns the
    /// subgraph with nodes relabeled `0..nodes.len()`.
    pub fn induced(&self, nodes: &[usize]) -> NNGraph {
        let mut relabel = vec![usize::MAX; self.n];
        for (new, &old) in nodes.iter().enumerate() {
            relabel[old] = new;
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| relabel[e.i] != usize::MAX && relabel[e.j] != usize::MAX)
            .map(|e| {
                let (a, b) = (relabel[e.i], relabel[e.j]);
                Edge {
                    i: a.min(b),
                    j: a.max(b),
                    cost: e.cost,
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.i, e.j));
        Self::from_sorted(nodes.len(), edges)
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut label = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &(w, _) in &self.incident[v] {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.components().len() == 1
    }
}

/// Connects every node to its `k` nearest neighbors; an edge exists when
/// either endpoint selects the other. Equidistant candidates are taken in
/// ascending node order.
pub fn build_knn_graph(cloud: &PointCloud, k: usize) -> Result<NNGraph> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k must satisfy 0 < k < n (k = {k}, n = {n})")));
    }
    let mut pairs = BTreeSet::new();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (cloud.distance(i, j), j)));
        candidates.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &candidates[..k] {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            cost: cloud.distance(i, j),
        })
        .collect();
    Ok(NNGraph::from_sorted(n, edges))
}

/// Connects every pair of distinct points within Euclidean distance `delta`.
pub fn build_ball_graph(cloud: &PointCloud, delta: f64) -> Result<NNGraph> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::invalid(format!("delta must be positive (got {delta})")));
    }
    let n = cloud.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = cloud.distance(i, j);
            if d <= delta {
                edges.push(Edge { i, j, cost: d });
            }
        }
    }
    Ok(NNGraph::from_sorted(n, edges))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Ldr,
    Jdr,
    Ecdr,
    Npdr,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Ldr => "ldr",
            Rule::Jdr => "jdr",
            Rule::Ecdr => "ecdr",
            Rule::Npdr => "npdr",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ldr" => Ok(Rule::Ldr),
            "jdr" => Ok(Rule::Jdr),
            "ecdr" => Ok(Rule::Ecdr),
            "npdr" => Ok(Rule::Npdr),
            other => Err(Error::invalid(format!("unknown rule '{other}'"))),
        }
    }
}

/// Edges flagged as bridges by a decision rule.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeSet {
    pub edges: BTreeSet<(usize, usize)>,
    pub rule: Rule,
    pub q: f64,
}

impl BridgeSet {
    pub fn empty(rule: Rule, q: f64) -> Self {
        Self {
            edges: BTreeSet::new(),
            rule,
            q,
        }
    }

    /// Collects the edges of `graph` whose indices are listed.
    pub fn from_indices(graph: &NNGraph, indices: impl IntoIterator<Item = usize>, rule: Rule, q: f64) -> Self {
        let edges = indices
            .into_iter()
            .map(|idx| {
                let e = graph.edge(idx);
                (e.i, e.j)
            })
            .collect();
        Self { edges, rule, q }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

/// A graph whose flagged edges carry the additive penalty `M = n * max d_e`.
#[derive(Debug, Clone)]
pub struct PenalizedGraph<'a> {
    base: &'a NNGraph,
    flagged: Vec<bool>,
    penalty: f64,
}

impl<'a> PenalizedGraph<'a> {
    pub fn new(base: &'a NNGraph, bridges: &BridgeSet) -> Result<Self> {
        let mut flagged = vec![false; base.edge_count()];
        for &(i, j) in &bridges.edges {
            let idx = base.edge_index(i, j).ok_or_else(|| {
                Error::invalid(format!("bridge ({i}, {j}) is not an edge of the graph"))
            })?;
            flagged[idx] = true;
        }
        Ok(Self::from_flags(base, flagged))
    }

    pub(crate) fn from_flags(base: &'a NNGraph, flagged: Vec<bool>) -> Self {
        let penalty = base.node_count() as f64 * base.max_cost();
        Self {
            base,
            flagged,
            penalty,
        }
    }

    pub fn base(&self) -> &NNGraph {
        self.base
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn is_flagged(&self, edge: usize) -> bool {
        self.flagged[edge]
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    /// Effective per-edge weights `d_e + M` for flagged edges, `d_e` otherwise.
    pub fn weights(&self) -> Vec<f64> {
        self.base
            .edges()
            .iter()
            .zip(&self.flagged)
            .map(|(e, &f)| if f { e.cost + self.penalty } else { e.cost })
            .collect()
    }
}
