//! Bridge decision rules.
//!
//! Every rule computes one statistic per edge and flags a quantile-sized
//! tail of it:
//!
//! | rule | statistic                         | flagged                     |
//! |------|-----------------------------------|-----------------------------|
//! | LDR  | density-normalized length         | `>= Q(q)`                   |
//! | JDR  | Jaccard similarity of neighbor sets | `< Q(1 - q)`              |
//! | ECDR | edge betweenness, in `K` rounds   | top `ceil((1-q)|E|/K)` per round |
//! | NPDR | neighbor probability              | `< Q(1 - q)`                |

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{BridgeSet, NNGraph, PenalizedGraph, Rule};
use crate::kernels::{
    diffusion_kernel, neighbor_probability_dense, neighbor_probability_lowrank, Epsilon,
};
use crate::linalg::DENSE_THRESHOLD;
use crate::paths::check_weights;

/// Relative tolerance under which two path costs count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Nearest-rank quantile: the element at `ceil(q m) - 1` of the sorted
/// values, clamped to the valid range.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty list"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::invalid(format!("quantile level must lie in [0, 1] (got {q})")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v[nearest_rank_index(v.len(), q)])
}

pub(crate) fn nearest_rank_index(m: usize, q: f64) -> usize {
    let x = q * m as f64;
    // absorb representation error such as 0.99 * 100 = 98.99999999999999
    let r = x.round();
    let c = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (c as isize - 1).clamp(0, m as isize - 1) as usize
}

/// One value per edge, indexed like `NNGraph::edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStatistic {
    pub values: Vec<f64>,
}

impl EdgeStatistic {
    /// Edges whose value is `>= Q(q)`.
    pub fn at_or_above(&self, q: f64) -> Result<Vec<usize>> {
        if self.values.is_empty() {
            return Ok(Vec::new());
        }
        let t = quantile(&self.values, q)?;
        Ok(self.select(|v| v >= t))
    }

    /// Edges whose value is strictly `< Q(level)`.
    pub fn below(&self, level: f64) -> Result<Vec<usize>> {
        if self.values.is_empty() {
            return Ok(Vec::new());
        }
        let t = quantile(&self.values, level)?;
        Ok(self.select(|v| v < t))
    }

    fn select(&self, keep: impl Fn(f64) -> bool) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| keep(v))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Total ECDR budget, spread over the rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcdrBasis {
    /// `(1 - q) |E|`
    Edges,
    /// `(1 - q) n`
    Nodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpdrMode {
    /// Dense up to the dense threshold, low rank above it.
    Auto,
    Dense,
    LowRank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleConfig {
    /// Good-edge fraction in (0, 1).
    pub q: f64,
    /// ECDR rounds.
    pub rounds: usize,
    pub ecdr_basis: EcdrBasis,
    /// NPDR stop probability.
    pub p: f64,
    pub epsilon: Epsilon,
    /// NPDR low-rank terms; `None` means `min(n, 50)`.
    pub rank: Option<usize>,
    pub mode: NpdrMode,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            q: 0.99,
            rounds: 15,
            ecdr_basis: EcdrBasis::Edges,
            p: 0.01,
            epsilon: Epsilon::MedianHalf,
            rank: None,
            mode: NpdrMode::Auto,
        }
    }
}

impl RuleConfig {
    pub fn with_q(self, q: f64) -> Self {
        Self { q, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_q(self.q)?;
        if self.rounds == 0 {
            return Err(Error::invalid("ECDR needs at least one round"));
        }
        Ok(())
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("q must lie in (0, 1) (got {q})")))
    }
}

/// Runs `rule` on `graph`.
pub fn detect(rule: Rule, graph: &NNGraph, cfg: &RuleConfig) -> Result<BridgeSet> {
    cfg.validate()?;
    match rule {
        Rule::Ldr => ldr(graph, cfg.q),
        Rule::Jdr => jdr(graph, cfg.q),
        Rule::Ecdr => Ok(ecdr_run(graph, cfg.q, cfg.rounds, cfg.ecdr_basis)?.bridges),
        Rule::Npdr => npdr(graph, cfg),
    }
}

/// `d_kl / sqrt(d_k. d_l.)` with `d_k.` the summed incident cost of `k`.
/// Edges touching a node with zero summed cost get 0.
pub fn normalized_lengths(graph: &NNGraph) -> EdgeStatistic {
    let out_sum: Vec<f64> = (0..graph.node_count())
        .map(|k| graph.incident(k).iter().map(|&(_, e)| graph.edge(e).cost).sum())
        .collect();
    let values = graph
        .edges()
        .iter()
        .map(|e| {
            let denom = (out_sum[e.i] * out_sum[e.j]).sqrt();
            if denom > 0.0 {
                e.cost / denom
            } else {
                0.0
            }
        })
        .collect();
    EdgeStatistic { values }
}

/// Length decision rule.
pub fn ldr(graph: &NNGraph, q: f64) -> Result<BridgeSet> {
    check_q(q)?;
    let stat = normalized_lengths(graph);
    // zero normalized length is never a bridge
    let flagged = stat
        .at_or_above(q)?
        .into_iter()
        .filter(|&e| stat.values[e] > 0.0);
    Ok(BridgeSet::from_indices(graph, flagged, Rule::Ldr, q))
}

/// Jaccard similarity of the endpoints' neighbor sets (self excluded).
pub fn jaccard(graph: &NNGraph) -> EdgeStatistic {
    let values = graph
        .edges()
        .iter()
        .map(|e| {
            let a: Vec<usize> = graph.neighbors(e.i).collect();
            let b: Vec<usize> = graph.neighbors(e.j).collect();
            let common = sorted_intersection_len(&a, &b);
            common as f64 / (a.len() + b.len() - common) as f64
        })
        .collect();
    EdgeStatistic { values }
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Jaccard decision rule.
pub fn jdr(graph: &NNGraph, q: f64) -> Result<BridgeSet> {
    check_q(q)?;
    let flagged = jaccard(graph).below(1.0 - q)?;
    Ok(BridgeSet::from_indices(graph, flagged, Rule::Jdr, q))
}

/// Edge betweenness under the graph's own costs.
pub fn edge_betweenness(graph: &NNGraph) -> Result<EdgeStatistic> {
    edge_betweenness_weighted(graph, &graph.costs())
}

const BRANDES_CHUNK: usize = 16;

/// Brandes accumulation over ordered source/target pairs. Tied shortest
/// paths split their unit of credit equally.
pub fn edge_betweenness_weighted(graph: &NNGraph, weights: &[f64]) -> Result<EdgeStatistic> {
    check_weights(graph, weights)?;
    let n = graph.node_count();
    let m = graph.edge_count();
    let sources: Vec<usize> = (0..n).collect();
    // fixed chunking and in-order reduction keep the sum schedule independent
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BRANDES_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; m];
            let mut work = BrandesWork::new(n);
            for &s in chunk {
                work.accumulate(graph, weights, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut values = vec![0.0; m];
    for part in partials {
        for (v, p) in values.iter_mut().zip(part) {
            *v += p;
        }
    }
    Ok(EdgeStatistic { values })
}

struct BrandesWork {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    settled: Vec<bool>,
    preds: Vec<Vec<(usize, usize)>>,
    order: Vec<usize>,
}

impl BrandesWork {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            settled: vec![false; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
        }
    }

    fn accumulate(&mut self, graph: &NNGraph, weights: &[f64], source: usize, acc: &mut [f64]) {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

        #[derive(PartialEq)]
        struct Key(f64, usize);
        impl Eq for Key {}
        impl PartialOrd for Key {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Key {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
            }
        }

        self.dist.fill(f64::INFINITY);
        self.sigma.fill(0.0);
        self.delta.fill(0.0);
        self.settled.fill(false);
        self.preds.iter_mut().for_each(Vec::clear);
        self.order.clear();

        self.dist[source] = 0.0;
        self.sigma[source] = 1.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Key(0.0, source)));
        while let Some(Reverse(Key(d, v))) = heap.pop() {
            if self.settled[v] || d > self.dist[v] {
                continue;
            }
            self.settled[v] = true;
            self.order.push(v);
            for &(w, e) in graph.incident(v) {
                if self.settled[w] {
                    continue;
                }
                let cand = d + weights[e];
                let cur = self.dist[w];
                if ties(cand, cur) {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push((v, e));
                } else if cand < cur {
                    self.dist[w] = cand;
                    self.sigma[w] = self.sigma[v];
                    self.preds[w].clear();
                    self.preds[w].push((v, e));
                    heap.push(Reverse(Key(cand, w)));
                }
            }
        }
        for &w in self.order.iter().rev() {
            for &(v, e) in &self.preds[w] {
                let c = self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
                acc[e] += c;
                self.delta[v] += c;
            }
        }
    }
}

fn ties(a: f64, b: f64) -> bool {
    b.is_finite() && (a == b || (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs()))
}

/// Outcome of an ECDR run, with the edges added in each round.
#[derive(Debug, Clone)]
pub struct EcdrRun {
    pub bridges: BridgeSet,
    pub rounds: Vec<Vec<usize>>,
    /// Set when every edge was flagged before the last round.
    pub exhausted: bool,
}

/// Edge centrality decision rule with the default `|E|`-based round size.
///
/// Round `k` of `K` tops the flagged set up to `ceil(k (1-q) |E| / K)`
/// edges, and always adds at least one, so the total reaches
/// `ceil((1-q) |E|)` when rounds are not clamped.
pub fn ecdr(graph: &NNGraph, q: f64, rounds: usize) -> Result<BridgeSet> {
    ecdr_run(graph, q, rounds, EcdrBasis::Edges).map(|r| r.bridges)
}

pub fn ecdr_run(graph: &NNGraph, q: f64, rounds: usize, basis: EcdrBasis) -> Result<EcdrRun> {
    check_q(q)?;
    if rounds == 0 {
        return Err(Error::invalid("ECDR needs at least one round"));
    }
    let m = graph.edge_count();
    let base = match basis {
        EcdrBasis::Edges => m,
        EcdrBasis::Nodes => graph.node_count(),
    } as f64;
    let total = (1.0 - q) * base;

    let mut flagged = vec![false; m];
    let mut history = Vec::with_capacity(rounds);
    let mut exhausted = false;
    let mut count = 0;
    for round in 1..=rounds {
        // cumulative target ceil(round * total / K), at least one per round
        let target = snapped_ceil(round as f64 * total / rounds as f64);
        let take = target.saturating_sub(count).max(1);
        let free = flagged.iter().filter(|&&f| !f).count();
        if free == 0 {
            exhausted = true;
            break;
        }
        let weights = PenalizedGraph::from_flags(graph, flagged.clone()).weights();
        let be = edge_betweenness_weighted(graph, &weights)?.values;
        let mut candidates: Vec<usize> = (0..m).filter(|&e| !flagged[e]).collect();
        candidates.sort_by(|&a, &b| be[b].total_cmp(&be[a]).then(a.cmp(&b)));
        candidates.truncate(take);
        count += candidates.len();
        for &e in &candidates {
            flagged[e] = true;
        }
        history.push(candidates);
    }
    let indices = (0..m).filter(|&e| flagged[e]);
    Ok(EcdrRun {
        bridges: BridgeSet::from_indices(graph, indices, Rule::Ecdr, q),
        rounds: history,
        exhausted,
    })
}

/// `ceil(x)`, treating values within 1e-9 of an integer as that integer.
fn snapped_ceil(x: f64) -> usize {
    let r = x.round();
    (if (x - r).abs() < 1e-9 { r } else { x.ceil() }) as usize
}

/// Symmetrized neighbor-probability score of every edge.
pub fn npdr_scores(graph: &NNGraph, cfg: &RuleConfig) -> Result<EdgeStatistic> {
    let n = graph.node_count();
    if graph.edge_count() == 0 {
        return Ok(EdgeStatistic { values: Vec::new() });
    }
    let eps = cfg.epsilon.resolve(graph)?;
    let kernel = diffusion_kernel(graph, eps)?;
    let dense = match cfg.mode {
        NpdrMode::Auto => n <= DENSE_THRESHOLD,
        NpdrMode::Dense => true,
        NpdrMode::LowRank => false,
    };
    let np = if dense {
        neighbor_probability_dense(&kernel, cfg.p)?
    } else {
        let rank = cfg.rank.unwrap_or(50).min(n);
        neighbor_probability_lowrank(&kernel, cfg.p, rank)?
    };
    Ok(EdgeStatistic {
        values: np.edge_scores(graph),
    })
}

/// Neighbor probability decision rule.
pub fn npdr(graph: &NNGraph, cfg: &RuleConfig) -> Result<BridgeSet> {
    check_q(cfg.q)?;
    let scores = npdr_scores(graph, cfg)?;
    let flagged = scores.below(1.0 - cfg.q)?;
    Ok(BridgeSet::from_indices(graph, flagged, Rule::Npdr, cfg.q))
}
