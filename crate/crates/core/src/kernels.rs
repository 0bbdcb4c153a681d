//! Diffusion-maps kernel, weighted graph Laplacian and the neighbor
//! probability matrix `N = p (I - (1-p) P)^{-1}`.
//!
//! `N[i][j]` is the probability that a walk started at `i`, which halts
//! with probability `p` before every step, halts at `j`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::graph::NNGraph;
use crate::linalg::{self, dense_solve, top_eigenpairs, EigenPairs, SparseMatrix};
use crate::stats::median;

/// Smallest stop probability accepted; below it `I - (1-p) P` is too close
/// to singular to solve reliably.
pub const MIN_STOP_PROBABILITY: f64 = 1e-6;

/// Kernel scale selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Value(f64),
    /// Binary weights: every edge gets affinity 1.
    Infinite,
    /// Half the median edge cost.
    MedianHalf,
}

impl Epsilon {
    pub fn resolve(self, graph: &NNGraph) -> Result<f64> {
        match self {
            Epsilon::Value(e) if e > 0.0 => Ok(e),
            Epsilon::Value(e) => Err(Error::invalid(format!("epsilon must be positive (got {e})"))),
            Epsilon::Infinite => Ok(f64::INFINITY),
            Epsilon::MedianHalf => {
                if graph.edge_count() == 0 {
                    return Ok(1.0);
                }
                let eps = median(&graph.costs()) / 2.0;
                if eps > 0.0 {
                    Ok(eps)
                } else {
                    Err(Error::invalid(
                        "median edge cost is zero; supply an explicit epsilon",
                    ))
                }
            }
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Value(e) => write!(f, "{e}"),
            Epsilon::Infinite => f.write_str("inf"),
            Epsilon::MedianHalf => f.write_str("median-half"),
        }
    }
}

impl FromStr for Epsilon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inf" | "infinity" => Ok(Epsilon::Infinite),
            "median-half" => Ok(Epsilon::MedianHalf),
            _ => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad epsilon '{s}'")))?;
                if v.is_infinite() && v > 0.0 {
                    Ok(Epsilon::Infinite)
                } else if v > 0.0 {
                    Ok(Epsilon::Value(v))
                } else {
                    Err(Error::invalid(format!("epsilon must be positive (got {s})")))
                }
            }
        }
    }
}

/// Row-stochastic diffusion kernel `P = D^{-1} A` with
/// `A = Dhat^{-1} Phat Dhat^{-1}`.
#[derive(Debug, Clone)]
pub struct DiffusionKernel {
    pub p: SparseMatrix,
    /// `f64::INFINITY` for binary weights.
    pub epsilon: f64,
    pub d_hat: Vec<f64>,
    /// Row sums of `A`; `D^{1/2} P D^{-1/2}` is symmetric.
    pub d: Vec<f64>,
}

pub fn diffusion_kernel(graph: &NNGraph, epsilon: f64) -> Result<DiffusionKernel> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::invalid(format!("epsilon must be positive (got {epsilon})")));
    }
    let n = graph.node_count();
    let affinity = |d: f64| {
        if epsilon.is_infinite() {
            1.0
        } else {
            (-d * d / epsilon).exp()
        }
    };
    let mut d_hat = vec![1.0; n];
    let mut triplets = Vec::with_capacity(n + 2 * graph.edge_count());
    for e in graph.edges() {
        let w = affinity(e.cost);
        d_hat[e.i] += w;
        d_hat[e.j] += w;
        triplets.push((e.i, e.j, w));
        triplets.push((e.j, e.i, w));
    }
    triplets.extend((0..n).map(|k| (k, k, 1.0)));
    let a_triplets: Vec<(usize, usize, f64)> = triplets
        .into_iter()
        .map(|(l, k, w)| (l, k, w / (d_hat[l] * d_hat[k])))
        .collect();
    let mut d = vec![0.0; n];
    for &(l, _, a) in &a_triplets {
        d[l] += a;
    }
    let p_triplets = a_triplets
        .into_iter()
        .map(|(l, k, a)| (l, k, a / d[l]))
        .collect();
    let p = SparseMatrix::from_triplets(n, n, p_triplets)?;
    Ok(DiffusionKernel {
        p,
        epsilon,
        d_hat,
        d,
    })
}

impl DiffusionKernel {
    pub fn len(&self) -> usize {
        self.p.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Full spectrum of `P`, descending, from its symmetric similar form.
    pub fn spectrum(&self) -> Vec<f64> {
        let sqrt_d: Vec<f64> = self.d.iter().map(|x| x.sqrt()).collect();
        let inv: Vec<f64> = sqrt_d.iter().map(|x| 1.0 / x).collect();
        let s = self.p.scale(&sqrt_d, &inv).to_dense();
        let s = (&s + s.transpose()) * 0.5;
        let mut vals: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        vals
    }
}

/// Weighted graph Laplacian `(I - P) / epsilon`.
pub fn graph_laplacian(kernel: &DiffusionKernel) -> SparseMatrix {
    let n = kernel.len();
    let scale = 1.0 / kernel.epsilon;
    let triplets = kernel
        .p
        .triplets()
        .map(|(i, j, v)| (i, j, -v * scale))
        .chain((0..n).map(|k| (k, k, scale)))
        .collect();
    SparseMatrix::from_triplets(n, n, triplets).expect("square")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    Dense,
    LowRank,
    Series,
}

/// Neighbor probabilities in one of their representations.
#[derive(Debug, Clone)]
pub struct NeighborProbability {
    pub mode: NeighborMode,
    pub p: f64,
    pub dense: Option<DMatrix<f64>>,
    pub lowrank: Option<EigenPairs>,
}

impl NeighborProbability {
    /// Symmetrized score `(N_lm + N_ml) / 2` for every edge.
    pub fn edge_scores(&self, graph: &NNGraph) -> Vec<f64> {
        match (&self.dense, &self.lowrank) {
            (Some(n), _) => graph
                .edges()
                .iter()
                .map(|e| 0.5 * (n[(e.i, e.j)] + n[(e.j, e.i)]))
                .collect(),
            (None, Some(pairs)) => lowrank_scores(pairs, self.p, graph),
            (None, None) => unreachable!("neighbor probability without a representation"),
        }
    }
}

fn check_stop_probability(p: f64) -> Result<()> {
    if p > MIN_STOP_PROBABILITY && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "stop probability must lie in ({MIN_STOP_PROBABILITY}, 1) (got {p})"
        )))
    }
}

/// `N = p (I - (1-p) P)^{-1}` by a dense solve. Entries are clamped at 0.
pub fn neighbor_probability_dense(kernel: &DiffusionKernel, p: f64) -> Result<NeighborProbability> {
    let mut n = neighbor_matrix_unclamped(kernel, p)?;
    n.iter_mut().for_each(|x| *x = x.max(0.0));
    Ok(NeighborProbability {
        mode: NeighborMode::Dense,
        p,
        dense: Some(n),
        lowrank: None,
    })
}

/// Dense `N` without clamping of round-off negatives.
pub fn neighbor_matrix_unclamped(kernel: &DiffusionKernel, p: f64) -> Result<DMatrix<f64>> {
    check_stop_probability(p)?;
    let size = kernel.len();
    let id = DMatrix::<f64>::identity(size, size);
    // p I + (1-p)(I - P): exact on the diagonal when P = I
    let system = &id * p + (&id - kernel.p.to_dense()) * (1.0 - p);
    dense_solve(&system, &(id * p))
}

/// Truncated walk expansion `sum_{m=0}^{M} p (1-p)^m P^m`, with `M` the
/// smallest count leaving tail mass `(1-p)^{M+1} <= tol`.
pub fn neighbor_probability_series(kernel: &DiffusionKernel, p: f64, tol: f64) -> Result<DMatrix<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("stop probability must lie in (0, 1) (got {p})")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid("series tolerance must lie in (0, 1)"));
    }
    let q = 1.0 - p;
    let size = kernel.len();
    let mut power = DMatrix::<f64>::identity(size, size);
    let mut weight = p;
    let mut sum = &power * weight;
    let mut tail = q;
    while tail > tol {
        power = kernel.p.mul_dense(&power);
        weight *= q;
        sum += &power * weight;
        tail *= q;
    }
    Ok(sum)
}

/// Edge scores from the rank-`rank` spectral expansion of `N`.
pub fn edge_scores_lowrank(
    kernel: &DiffusionKernel,
    p: f64,
    rank: usize,
    graph: &NNGraph,
) -> Result<Vec<f64>> {
    neighbor_probability_lowrank(kernel, p, rank).map(|np| np.edge_scores(graph))
}

pub fn neighbor_probability_lowrank(
    kernel: &DiffusionKernel,
    p: f64,
    rank: usize,
) -> Result<NeighborProbability> {
    check_stop_probability(p)?;
    let pairs = top_eigenpairs(&kernel.p, &kernel.d, rank, linalg::DEFAULT_EIGEN_TOL)?;
    Ok(NeighborProbability {
        mode: NeighborMode::LowRank,
        p,
        dense: None,
        lowrank: Some(pairs),
    })
}

fn lowrank_scores(pairs: &EigenPairs, p: f64, graph: &NNGraph) -> Vec<f64> {
    let q = 1.0 - p;
    let coeffs: Vec<f64> = (0..pairs.len())
        .map(|j| p / (1.0 - q * pairs.values[j]) / pairs.pairing(j))
        .collect();
    let entry = |l: usize, m: usize| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * pairs.right[j][l] * pairs.left[j][m])
            .sum()
    };
    graph
        .edges()
        .iter()
        .map(|e| 0.5 * (entry(e.i, e.j) + entry(e.j, e.i)))
        .collect()
}

/// Largest elementwise deviations of the two finite-sample identities
/// relating `N` to the graph Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDeviations {
    /// `|(I - N) - (1-p)(I - P)(I - (1-p)P)^{-1}|_max`
    pub laplacian_factor: f64,
    /// `|(I - (1-p)P) - (p I + (1-p)(I - P))|_max`
    pub regularized_split: f64,
}

impl IdentityDeviations {
    pub fn max(&self) -> f64 {
        self.laplacian_factor.max(self.regularized_split)
    }
}

pub fn regularized_laplacian_identity_check(
    kernel: &DiffusionKernel,
    p: f64,
) -> Result<IdentityDeviations> {
    check_stop_probability(p)?;
    let size = kernel.len();
    let q = 1.0 - p;
    let id = DMatrix::<f64>::identity(size, size);
    let pd = kernel.p.to_dense();
    let system = &id - &pd * q;
    let inverse = dense_solve(&system, &id)?;
    let n = neighbor_matrix_unclamped(kernel, p)?;
    let lhs = &id - &n;
    let rhs = (&id - &pd) * q * &inverse;
    let split = &id * p + (&id - &pd) * q;
    Ok(IdentityDeviations {
        laplacian_factor: (lhs - rhs).amax(),
        regularized_split: (system - split).amax(),
    })
}
