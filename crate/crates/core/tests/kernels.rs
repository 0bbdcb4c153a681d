mod common;

use geodenoise::kernels::{
    diffusion_kernel, edge_scores_lowrank, neighbor_matrix_unclamped, neighbor_probability_dense,
    regularized_laplacian_identity_check, Epsilon,
};
use geodenoise::linalg::{top_eigenpairs_with, EigenStrategy};
use geodenoise::{DMatrix, NNGraph};
use nalgebra::SymmetricEigen;

const PS: [f64; 3] = [0.01, 0.1, 0.5];

fn battery() -> Vec<NNGraph> {
    common::kernel_graphs(25, 11)
}

fn similar_symmetric(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
    let n = d.len();
    let s = DMatrix::from_fn(n, n, |i, j| m[(i, j)] * d[i].sqrt() / d[j].sqrt());
    (&s + s.transpose()) * 0.5
}

fn sorted_eig(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = idx.iter().map(|&k| e.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(e.eigenvectors.nrows(), idx.len(), |i, j| e.eigenvectors[(i, idx[j])]);
    (vals, vecs)
}

#[test]
fn n_eigenvalues_follow_the_p_spectrum() {
    for g in battery() {
        let eps = Epsilon::MedianHalf.resolve(&g).unwrap();
        let k = diffusion_kernel(&g, eps).unwrap();
        let (lam, u) = sorted_eig(similar_symmetric(&k.p.to_dense(), &k.d));
        for p in PS {
            let nm = neighbor_matrix_unclamped(&k, p).unwrap();
            let (mu, v) = sorted_eig(similar_symmetric(&nm, &k.d));
            for (l, m) in lam.iter().zip(&mu) {
                let want = p / (1.0 - (1.0 - p) * l);
                assert!((m - want).abs() <= 1e-8, "p={p}: {m} vs {want}");
            }
            for j in 0..lam.len() {
                let gap = [j.checked_sub(1), Some(j + 1)]
                    .iter()
                    .flatten()
                    .filter(|&&i| i < lam.len())
                    .map(|&i| (lam[i] - lam[j]).abs())
                    .fold(f64::INFINITY, f64::min);
                if gap < 1e-4 {
                    continue;
                }
                let cos = u.column(j).dot(&v.column(j)).abs().min(1.0);
                assert!(cos.acos() <= 1e-6, "angle {} at j={j}", cos.acos());
            }
        }
    }
}

#[test]
fn kernel_spectrum_in_unit_interval() {
    for (g, eps) in common::kernel_battery(25, 5) {
        for eps in [eps, f64::INFINITY] {
            let s = diffusion_kernel(&g, eps).unwrap().spectrum();
            assert!(s.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)), "{eps}: {s:?}");
            assert!((s[0] - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn truncated_kernels_can_leave_the_unit_interval() {
    // k-NN truncation of the Gaussian kernel need not be positive semidefinite
    let negative = battery().iter().any(|g| {
        let k = diffusion_kernel(g, Epsilon::MedianHalf.resolve(g).unwrap()).unwrap();
        k.spectrum().last().copied().unwrap() < -1e-6
    });
    assert!(negative);
}

#[test]
fn dense_n_matches_neumann_series() {
    for g in battery().into_iter().filter(|g| g.node_count() <= 40) {
        let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
        for p in PS {
            let dense = neighbor_matrix_unclamped(&k, p).unwrap();
            let series = common::neumann_series(&k.p.to_dense(), p, 1e-12);
            assert!((dense - series).amax() <= 1e-8);
        }
    }
}

#[test]
fn n_is_row_stochastic_and_nonnegative() {
    for g in battery().into_iter().take(8) {
        let k = diffusion_kernel(&g, 0.3).unwrap();
        let n = neighbor_probability_dense(&k, 0.05).unwrap().dense.unwrap();
        for i in 0..n.nrows() {
            assert!((n.row(i).sum() - 1.0).abs() < 1e-10);
        }
        assert!(n.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn identities_hold_on_battery() {
    for g in battery() {
        let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
        for p in PS {
            let dev = regularized_laplacian_identity_check(&k, p).unwrap();
            assert!(dev.max() <= 1e-10, "{dev:?}");
        }
    }
}

#[test]
fn full_rank_lowrank_scores_match_dense() {
    for g in battery().into_iter().take(10) {
        let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
        let n = g.node_count();
        for p in PS {
            let dense = neighbor_probability_dense(&k, p).unwrap().edge_scores(&g);
            let low = edge_scores_lowrank(&k, p, n, &g).unwrap();
            for (a, b) in dense.iter().zip(&low) {
                assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn iterative_eigenpairs_agree_with_dense() {
    for g in battery().into_iter().take(6) {
        let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
        let count = 6.min(g.node_count());
        let dense = top_eigenpairs_with(&k.p, &k.d, count, 1e-10, EigenStrategy::Dense).unwrap();
        let iter = top_eigenpairs_with(&k.p, &k.d, count, 1e-10, EigenStrategy::Iterative).unwrap();
        for (a, b) in dense.values.iter().zip(&iter.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(iter.max_residual(&k.p) < 1e-6);
    }
}

#[test]
fn iterative_eigenpairs_resolve_clustered_spectrum() {
    // noisy roll: the top 35 eigenvalues lie within 2e-3 of 1
    use geodenoise::swissroll::{apply_noise, noise_draws, sample_swiss_roll, trial_rng};
    let sample = sample_swiss_roll(250, 1).unwrap();
    let u = noise_draws(250, &mut trial_rng(1, 0));
    let g = geodenoise::build_ball_graph(&apply_noise(&sample, 1.54, u).cloud(&sample), 4.0).unwrap();
    let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
    let dense = top_eigenpairs_with(&k.p, &k.d, 20, 1e-10, EigenStrategy::Dense).unwrap();
    let iter = top_eigenpairs_with(&k.p, &k.d, 20, 1e-10, EigenStrategy::Iterative).unwrap();
    for (a, b) in dense.values.iter().zip(&iter.values) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert!(iter.max_residual(&k.p) < 1e-8);
}
