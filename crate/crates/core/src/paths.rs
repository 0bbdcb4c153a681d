//! Single-source shortest paths and geodesic estimates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NNGraph, PenalizedGraph};

/// Result of one Dijkstra run. Unreachable nodes have `f64::INFINITY`
/// distance and no predecessor.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub source: usize,
    pub dist: Vec<f64>,
    /// Edge index used to reach each node on its chosen shortest path.
    pub pred_edge: Vec<Option<usize>>,
    /// Reachable nodes in the order they were settled.
    pub order: Vec<usize>,
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, ties by node id
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn check_weights(graph: &NNGraph, weights: &[f64]) -> Result<()> {
    if weights.len() != graph.edge_count() {
        return Err(Error::invalid(format!(
            "{} weights supplied for {} edges",
            weights.len(),
            graph.edge_count()
        )));
    }
    if let Some(idx) = weights.iter().position(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::InvalidGraph(format!(
            "edge {idx} has negative or NaN weight {}",
            weights[idx]
        )));
    }
    Ok(())
}

/// Dijkstra from `source` over `graph` using per-edge `weights`.
pub fn dijkstra(graph: &NNGraph, weights: &[f64], source: usize) -> Result<ShortestPathTree> {
    check_weights(graph, weights)?;
    if source >= graph.node_count() {
        return Err(Error::invalid(format!(
            "source {source} out of range for {} nodes",
            graph.node_count()
        )));
    }
    Ok(dijkstra_unchecked(graph, weights, source))
}

pub(crate) fn dijkstra_unchecked(graph: &NNGraph, weights: &[f64], source: usize) -> ShortestPathTree {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred_edge = vec![None; n];
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State {
        cost: 0.0,
        node: source,
    });
    while let Some(State { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        order.push(node);
        for &(next, e) in graph.incident(node) {
            let cand = cost + weights[e];
            if cand < dist[next] {
                dist[next] = cand;
                pred_edge[next] = Some(e);
                heap.push(State {
                    cost: cand,
                    node: next,
                });
            }
        }
    }
    ShortestPathTree {
        source,
        dist,
        pred_edge,
        order,
    }
}

/// Minimum path costs from `source` to every node.
pub fn dijkstra_sssp(graph: &NNGraph, weights: &[f64], source: usize) -> Result<Vec<f64>> {
    dijkstra(graph, weights, source).map(|t| t.dist)
}

impl ShortestPathTree {
    /// Sums `costs` along each node's chosen path from the source.
    pub fn path_sums(&self, graph: &NNGraph, costs: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::INFINITY; self.dist.len()];
        out[self.source] = 0.0;
        for &v in &self.order[1..] {
            let e = self.pred_edge[v].expect("settled node has a predecessor");
            let edge = graph.edge(e);
            let parent = if edge.i == v { edge.j } else { edge.i };
            out[v] = out[parent] + costs[e];
        }
        out
    }
}

/// Plain shortest-path geodesic estimates, one row per source.
pub fn geodesics(graph: &NNGraph, sources: &[usize]) -> Result<Vec<Vec<f64>>> {
    let costs = graph.costs();
    check_sources(graph, sources)?;
    Ok(sources
        .par_iter()
        .map(|&s| dijkstra_unchecked(graph, &costs, s).dist)
        .collect())
}

/// Adjusted geodesics: minimum-cost paths under the penalized weights,
/// measured with the original edge costs.
pub fn adjusted_geodesics(pg: &PenalizedGraph<'_>, sources: &[usize]) -> Result<Vec<Vec<f64>>> {
    let graph = pg.base();
    check_sources(graph, sources)?;
    let weights = pg.weights();
    check_weights(graph, &weights)?;
    let costs = graph.costs();
    Ok(sources
        .par_iter()
        .map(|&s| dijkstra_unchecked(graph, &weights, s).path_sums(graph, &costs))
        .collect())
}

fn check_sources(graph: &NNGraph, sources: &[usize]) -> Result<()> {
    if sources.is_empty() {
        return Err(Error::invalid("at least one source is required"));
    }
    if let Some(&s) = sources.iter().find(|&&s| s >= graph.node_count()) {
        return Err(Error::invalid(format!("source {s} out of range")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BridgeSet, Rule};

    #[test]
    fn path_graph() {
        let g = NNGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        assert_eq!(dijkstra_sssp(&g, &g.costs(), 0).unwrap(), vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn unreachable_is_infinite() {
        let g = NNGraph::from_edges(2, []).unwrap();
        let d = dijkstra_sssp(&g, &[], 0).unwrap();
        assert_eq!(d[0], 0.0);
        assert!(d[1].is_infinite() && d[1] > 0.0);
    }

    #[test]
    fn negative_weight_rejected() {
        let g = NNGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(matches!(
            dijkstra_sssp(&g, &[-1.0], 0),
            Err(Error::InvalidGraph(_))
        ));
    }

    #[test]
    fn triangle_detour() {
        let g = NNGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.5)]).unwrap();
        let mut b = BridgeSet::empty(Rule::Ldr, 0.9);
        b.edges.insert((0, 2));
        let pg = PenalizedGraph::new(&g, &b).unwrap();
        let est = adjusted_geodesics(&pg, &[0]).unwrap();
        assert_eq!(est[0][2], 2.0);
        assert_eq!(geodesics(&g, &[0]).unwrap()[0][2], 1.5);
    }

    #[test]
    fn empty_bridge_set_matches_plain() {
        let g = NNGraph::from_edges(
            5,
            [(0, 1, 0.3), (1, 2, 1.1), (2, 3, 0.7), (0, 3, 2.5), (3, 4, 0.2)],
        )
        .unwrap();
        let b = BridgeSet::empty(Rule::Npdr, 0.9);
        let pg = PenalizedGraph::new(&g, &b).unwrap();
        let srcs: Vec<usize> = (0..5).collect();
        assert_eq!(adjusted_geodesics(&pg, &srcs).unwrap(), geodesics(&g, &srcs).unwrap());
    }

    #[test]
    fn bridge_only_path_is_still_used() {
        // the flagged edge is the only route to node 2
        let g = NNGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let mut b = BridgeSet::empty(Rule::Ldr, 0.9);
        b.edges.insert((1, 2));
        let pg = PenalizedGraph::new(&g, &b).unwrap();
        assert_eq!(adjusted_geodesics(&pg, &[0]).unwrap()[0], vec![0.0, 1.0, 3.0]);
    }

    #[test]
    fn empty_sources_rejected() {
        let g = NNGraph::from_edges(2, [(0, 1, 1.0)]).unwrap();
        assert!(geodesics(&g, &[]).is_err());
    }
}
