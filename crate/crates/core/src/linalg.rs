//! Sparse and dense numerical kernels.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>`. The sparse type is a plain
//! CSR matrix with strictly increasing column indices and no stored zeros.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Problems up to this size are decomposed densely.
pub const DENSE_THRESHOLD: usize = 600;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-8;
pub const MAX_EIGEN_MATVECS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros are dropped.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= n_rows || t.1 >= n_cols) {
            return Err(Error::invalid(format!(
                "entry ({r}, {c}) outside a {n_rows}x{n_cols} matrix"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for r in 0..n_rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    triplets.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), triplets).expect("dimensions taken from a matrix")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Returns `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> SparseMatrix {
        let triplets = self
            .triplets()
            .map(|(i, j, v)| (i, j, left[i] * v * right[j]))
            .collect();
        Self::from_triplets(self.n_rows, self.n_cols, triplets).expect("same shape")
    }

    pub fn transpose(&self) -> SparseMatrix {
        let triplets = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.n_cols, self.n_rows, triplets).expect("same shape")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::invalid(format!(
                "vector of length {} for a matrix with {} columns",
                x.len(),
                self.n_cols
            )));
        }
        Ok((0..self.n_rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect())
    }

    /// Sparse times dense block.
    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.nrows(), self.n_cols, "dimension mismatch");
        let mut out = DMatrix::zeros(self.n_rows, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for i in 0..self.n_rows {
                let (cols, vals) = self.row(i);
                out[(i, c)] = cols.iter().zip(vals).map(|(&j, &v)| v * col[j]).sum();
            }
        }
        out
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn dense_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::invalid("coefficient matrix must be square"));
    }
    if a.nrows() != b.nrows() {
        return Err(Error::invalid(format!(
            "right-hand side has {} rows, expected {}",
            b.nrows(),
            a.nrows()
        )));
    }
    let scale = a.amax();
    let threshold = 1e-14 * scale;
    let lu = a.clone().lu();
    let u = lu.u();
    let pivot = u.diagonal().amin();
    if scale == 0.0 || pivot < threshold {
        return Err(Error::SingularMatrix { pivot, threshold });
    }
    lu.solve(b).ok_or(Error::SingularMatrix { pivot, threshold })
}

/// Leading eigenpairs of a matrix similar to a symmetric one.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    /// Descending.
    pub values: Vec<f64>,
    pub right: Vec<Vec<f64>>,
    pub left: Vec<Vec<f64>>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `<left_j, right_j>`; divides out the separate unit normalizations
    /// when the pairs are used as a spectral expansion.
    pub fn pairing(&self, j: usize) -> f64 {
        dot(&self.left[j], &self.right[j])
    }

    /// Largest relative residual `|P v - lambda v| / |v|` over right and
    /// left vectors.
    pub fn max_residual(&self, p: &SparseMatrix) -> f64 {
        let pt = p.transpose();
        let mut worst: f64 = 0.0;
        for (k, &lambda) in self.values.iter().enumerate() {
            for (m, v) in [(p, &self.right[k]), (&pt, &self.left[k])] {
                let pv = m.matvec(v).expect("square");
                let r: f64 = pv
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(r / norm(v));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenStrategy {
    /// Dense decomposition up to [`DENSE_THRESHOLD`], iterative above.
    Auto,
    Dense,
    Iterative,
}

/// Top `count` eigenpairs of `p`, where `D^{1/2} P D^{-1/2}` is symmetric
/// for `D = diag(similarity)`. Right vectors are `D^{-1/2} u`, left vectors
/// `D^{1/2} u`, for eigenvectors `u` of the symmetric matrix.
pub fn top_eigenpairs(
    p: &SparseMatrix,
    similarity: &[f64],
    count: usize,
    tol: f64,
) -> Result<EigenPairs> {
    top_eigenpairs_with(p, similarity, count, tol, EigenStrategy::Auto)
}

pub fn top_eigenpairs_with(
    p: &SparseMatrix,
    similarity: &[f64],
    count: usize,
    tol: f64,
    strategy: EigenStrategy,
) -> Result<EigenPairs> {
    let n = p.n_rows();
    if p.n_cols() != n {
        return Err(Error::invalid("matrix must be square"));
    }
    if similarity.len() != n || similarity.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::invalid("similarity diagonal must hold n positive finite values"));
    }
    if count == 0 || count > n {
        return Err(Error::invalid(format!("eigenpair count must be in 1..={n} (got {count})")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let sqrt_d: Vec<f64> = similarity.iter().map(|d| d.sqrt()).collect();
    let inv_sqrt_d: Vec<f64> = sqrt_d.iter().map(|d| 1.0 / d).collect();
    let s = symmetrized(&p.scale(&sqrt_d, &inv_sqrt_d));

    let dense = match strategy {
        EigenStrategy::Auto => n <= DENSE_THRESHOLD,
        EigenStrategy::Dense => true,
        EigenStrategy::Iterative => false,
    };
    let (values, vectors) = if dense {
        dense_symmetric_top(&s, count)
    } else {
        // residual target on S, tightened so the P residuals stay below tol
        let spread = similarity.iter().cloned().fold(0.0, f64::max)
            / similarity.iter().cloned().fold(f64::INFINITY, f64::min);
        filtered_subspace_iteration(&s, count, tol / spread.sqrt(), MAX_EIGEN_MATVECS)?
    };

    let mut right = Vec::with_capacity(count);
    let mut left = Vec::with_capacity(count);
    for u in vectors {
        right.push(unit(u.iter().zip(&inv_sqrt_d).map(|(a, b)| a * b).collect()));
        left.push(unit(u.iter().zip(&sqrt_d).map(|(a, b)| a * b).collect()));
    }
    Ok(EigenPairs {
        values,
        right,
        left,
    })
}

fn symmetrized(s: &SparseMatrix) -> SparseMatrix {
    let triplets = s
        .triplets()
        .chain(s.triplets().map(|(i, j, v)| (j, i, v)))
        .map(|(i, j, v)| (i, j, 0.5 * v))
        .collect();
    SparseMatrix::from_triplets(s.n_rows(), s.n_cols(), triplets).expect("square")
}

fn dense_symmetric_top(s: &SparseMatrix, count: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(s.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order[..count].iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = order[..count]
        .iter()
        .map(|&k| fix_sign(eig.eigenvectors.column(k).iter().copied().collect()))
        .collect();
    (values, vectors)
}

/// Chebyshev-filtered subspace iteration with Rayleigh-Ritz and locking,
/// for symmetric `S` with spectrum in `[-1, 1]`. Each sweep damps the
/// interval `[-1, cutoff]`, where `cutoff` is the smallest Ritz value of the
/// active block, so clustered eigenvalues near 1 still separate quickly.
/// `max_matvecs` bounds the block products with `S`. Returns the top
/// `count` eigenpairs of `S`.
pub fn filtered_subspace_iteration(
    s: &SparseMatrix,
    count: usize,
    tol: f64,
    max_matvecs: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    const DEGREE: usize = 12;
    let n = s.n_rows();
    let block = n.min(count + 10.max(count / 2));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, block, |_, _| rng.random::<f64>() - 0.5);
    x = orthonormalize(&x, &[]);

    let mut locked: Vec<DVector<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;
    let mut cutoff: Option<f64> = None;
    let mut matvecs = 0;

    while matvecs < max_matvecs {
        if let Some(b) = cutoff {
            let degree = DEGREE.min(max_matvecs - matvecs);
            x = chebyshev_filter(s, &x, degree, b);
            matvecs += degree;
        }
        x = orthonormalize(&x, &locked);
        // Rayleigh-Ritz on the active block
        let sx = s.mul_dense(&x);
        matvecs += 1;
        let h = x.transpose() * &sx;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let w = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
            eig.eigenvectors[(r, order[c])]
        });
        let theta: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        x = &x * &w;
        let sxw = sx * &w;

        let mut newly = 0;
        last_residual = 0.0;
        for (c, &t) in theta.iter().enumerate() {
            if locked.len() + newly >= count {
                break;
            }
            let r = (sxw.column(c) - x.column(c) * t).norm();
            if r <= tol && newly == c {
                newly += 1;
            } else {
                last_residual = last_residual.max(r);
                break;
            }
        }
        for (c, &t) in theta.iter().enumerate().take(newly) {
            locked.push(x.column(c).into_owned());
            locked_vals.push(t);
        }
        if locked.len() >= count {
            let vectors = locked
                .into_iter()
                .map(|v| fix_sign(v.iter().copied().collect()))
                .collect();
            return Ok((locked_vals, vectors));
        }
        cutoff = theta.last().copied();
        if newly > 0 {
            x = x.columns(newly, x.ncols() - newly).into_owned();
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: matvecs,
        residual: last_residual,
    })
}

/// Applies `T_degree` of `S` mapped so that `[-1, cutoff]` goes to `[-1, 1]`.
fn chebyshev_filter(s: &SparseMatrix, x: &DMatrix<f64>, degree: usize, cutoff: f64) -> DMatrix<f64> {
    // keep the damped interval wide enough for a stable recurrence
    let upper = cutoff.clamp(-0.9, 1.0 - 1e-12);
    let half_width = (upper + 1.0) / 2.0;
    let center = (upper - 1.0) / 2.0;
    let step = |y: &DMatrix<f64>| (s.mul_dense(y) - y * center) / half_width;
    if degree == 0 {
        return x.clone();
    }
    let mut prev = x.clone();
    let mut cur = step(x);
    for _ in 1..degree {
        let next = step(&cur) * 2.0 - &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal basis of the columns of `y` after projecting out `against`.
fn orthonormalize(y: &DMatrix<f64>, against: &[DVector<f64>]) -> DMatrix<f64> {
    let mut y = y.clone();
    for _ in 0..2 {
        for v in against {
            let coeffs = y.transpose() * v;
            y -= v * coeffs.transpose();
        }
    }
    let k = y.ncols();
    y.qr().q().columns(0, k).into_owned()
}

fn fix_sign(mut v: Vec<f64>) -> Vec<f64> {
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let nv = norm(&v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    }
    v
}
