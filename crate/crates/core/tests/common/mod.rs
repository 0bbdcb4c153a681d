//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use geodenoise::{build_knn_graph, DMatrix, NNGraph, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_cloud(rng: &mut impl Rng, n: usize, dim: usize) -> PointCloud {
    PointCloud::new(
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect(),
    )
    .unwrap()
}

/// Random spanning tree plus `extra` random chords. With `integer` costs
/// drawn from 1..=3 many shortest paths tie.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, extra: usize, integer: bool) -> NNGraph {
    let cost = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.random_range(1..=3) as f64
        } else {
            rng.random_range(0.1..2.0)
        }
    };
    let mut local = ChaCha8Rng::seed_from_u64(rng.random());
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, local.random_range(0..=i));
    }
    let mut pairs = std::collections::BTreeMap::new();
    for k in 1..n {
        let parent = order[local.random_range(0..k)];
        let c = cost(&mut local);
        pairs.insert((order[k].min(parent), order[k].max(parent)), c);
    }
    let max_edges = n * (n - 1) / 2;
    while pairs.len() < (n - 1 + extra).min(max_edges) {
        let a = local.random_range(0..n);
        let b = local.random_range(0..n);
        if a != b {
            let c = cost(&mut local);
            pairs.entry((a.min(b), a.max(b))).or_insert(c);
        }
    }
    NNGraph::from_edges(n, pairs.into_iter().map(|((a, b), c)| (a, b, c))).unwrap()
}

pub fn floyd_warshall(graph: &NNGraph, weights: &[f64]) -> Vec<Vec<f64>> {
    let n = graph.node_count();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (e, edge) in graph.edges().iter().enumerate() {
        let w = weights[e].min(d[edge.i][edge.j]);
        d[edge.i][edge.j] = w;
        d[edge.j][edge.i] = w;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Edge betweenness by enumerating every shortest path of every ordered
/// pair; each pair's unit of credit is split equally over its paths.
pub fn brute_force_betweenness(graph: &NNGraph, weights: &[f64]) -> Vec<f64> {
    let n = graph.node_count();
    let d = floyd_warshall(graph, weights);
    let mut be = vec![0.0; graph.edge_count()];
    for s in 0..n {
        for t in 0..n {
            if s == t || !d[s][t].is_finite() {
                continue;
            }
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = Vec::new();
            extend(graph, weights, &d, s, t, 0.0, &mut stack, &mut paths);
            let share = 1.0 / paths.len() as f64;
            for p in &paths {
                for &e in p {
                    be[e] += share;
                }
            }
        }
    }
    be
}

#[allow(clippy::too_many_arguments)]
fn extend(
    graph: &NNGraph,
    weights: &[f64],
    d: &[Vec<f64>],
    at: usize,
    target: usize,
    so_far: f64,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let source_to_target = so_far + d[at][target];
    if at == target {
        out.push(stack.clone());
        return;
    }
    for &(next, e) in graph.incident(at) {
        // simple paths only: every node on the path touches a stacked edge
        let revisits = stack.iter().any(|&f| {
            let edge = graph.edge(f);
            edge.i == next || edge.j == next
        });
        if revisits {
            continue;
        }
        let cost = so_far + weights[e];
        // stay on a shortest path: prefix cost plus remaining distance
        if close(cost + d[next][target], source_to_target) {
            stack.push(e);
            extend(graph, weights, d, next, target, cost, stack, out);
            stack.pop();
        }
    }
}

/// k-NN by sorting all distances, ties by index, then union.
pub fn brute_force_knn(cloud: &PointCloud, k: usize) -> Vec<(usize, usize)> {
    let n = cloud.len();
    let mut set = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (cloud.distance(i, j), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            set.insert((i.min(j), i.max(j)));
        }
    }
    set.into_iter().collect()
}

/// Sum of `p ((1-p) P)^k` until the added term drops below `tol`.
pub fn neumann_series(p_mat: &DMatrix<f64>, p: f64, tol: f64) -> DMatrix<f64> {
    let n = p_mat.nrows();
    let mut term = DMatrix::<f64>::identity(n, n) * p;
    let mut sum = term.clone();
    for _ in 0..1_000_000 {
        term = &term * p_mat * (1.0 - p);
        sum += &term;
        if term.amax() < tol {
            break;
        }
    }
    sum
}

/// Seeded battery of connected k-NN kernels, `n` in `[10, 50]`.
pub fn kernel_graphs(count: usize, seed: u64) -> Vec<NNGraph> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = rng.random_range(10..=50);
        let dim = rng.random_range(2..=4);
        let k = rng.random_range(3..=6);
        let cloud = random_cloud(&mut rng, n, dim);
        let g = build_knn_graph(&cloud, k).unwrap();
        if g.is_connected() {
            out.push(g);
        }
    }
    out
}

/// Seeded battery of Gaussian kernels on complete graphs over random
/// points, `n` in `[10, 50]`, with a kernel scale per graph. Complete
/// graphs keep `Phat` positive semidefinite.
pub fn kernel_battery(count: usize, seed: u64) -> Vec<(NNGraph, f64)> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(10..=50);
            let dim = rng.random_range(2..=4);
            let cloud = random_cloud(&mut rng, n, dim);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j, cloud.distance(i, j)));
                }
            }
            let g = NNGraph::from_edges(n, edges).unwrap();
            let eps = rng.random_range(0.05..2.0);
            (g, eps)
        })
        .collect()
}
