//! One PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use geodenoise::kernels::{
    diffusion_kernel, edge_scores_lowrank, neighbor_matrix_unclamped, neighbor_probability_dense,
    regularized_laplacian_identity_check, DiffusionKernel, Epsilon,
};
use geodenoise::rules::edge_betweenness_weighted;
use geodenoise::stats::{median, spearman};
use geodenoise::swissroll::{run_benchmark, sample_swiss_roll, BenchmarkConfig, Estimator};
use geodenoise::tomography::{
    fbp_true_angles, random_sinogram, run_tomography, shepp_logan, similarity_rho, TomoConfig,
};
use geodenoise::{build_ball_graph, dijkstra_sssp, DMatrix, NNGraph, Rule};
use nalgebra::SymmetricEigen;

const PS: [f64; 3] = [0.01, 0.1, 0.5];

/// Frozen from the pilot below; the measured value there was 0.496.
const LOWRANK_SPEARMAN_MIN: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn battery() -> Vec<(NNGraph, DiffusionKernel)> {
    common::kernel_battery(25, 5)
        .into_iter()
        .map(|(g, eps)| {
            let k = diffusion_kernel(&g, eps).unwrap();
            (g, k)
        })
        .collect()
}

fn symmetric_form(m: &DMatrix<f64>, d: &[f64]) -> DMatrix<f64> {
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

fn spectral_lemma() -> Outcome {
    let start = Instant::now();
    let (mut value_dev, mut angle_dev) = (0.0f64, 0.0f64);
    for (_, k) in battery() {
        let (lam, u) = sorted_eig(symmetric_form(&k.p.to_dense(), &k.d));
        for p in PS {
            let nm = neighbor_matrix_unclamped(&k, p).unwrap();
            let (mu, v) = sorted_eig(symmetric_form(&nm, &k.d));
            for (l, m) in lam.iter().zip(&mu) {
                value_dev = value_dev.max((m - p / (1.0 - (1.0 - p) * l)).abs());
            }
            for j in 0..lam.len() {
                let gap = [j.wrapping_sub(1), j + 1]
                    .iter()
                    .filter(|&&i| i < lam.len())
                    .map(|&i| (lam[i] - lam[j]).abs())
                    .fold(f64::INFINITY, f64::min);
                if gap < 1e-4 {
                    continue;
                }
                let cos = u.column(j).dot(&v.column(j)).abs().min(1.0);
                angle_dev = angle_dev.max(cos.acos());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        value_dev <= 1e-8 && angle_dev <= 1e-6 && t < Duration::from_secs(30),
        format!("max eigenvalue dev {value_dev:.2e}, max angle {angle_dev:.2e}, {t:.1?}"),
    )
}

fn kernel_spectrum() -> Outcome {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, k) in battery() {
        let s = k.spectrum();
        lo = lo.min(*s.last().unwrap());
        hi = hi.max(s[0]);
    }
    outcome(
        lo >= -1e-10 && hi <= 1.0 + 1e-10,
        format!("eigenvalues in [{lo:.3e}, {hi:.12}]"),
    )
}

fn series_oracle() -> Outcome {
    let mut dev = 0.0f64;
    let mut count = 0;
    for (g, k) in battery() {
        if g.node_count() > 40 {
            continue;
        }
        count += 1;
        for p in PS {
            let dense = neighbor_matrix_unclamped(&k, p).unwrap();
            let series = common::neumann_series(&k.p.to_dense(), p, 1e-12);
            dev = dev.max((dense - series).amax());
        }
    }
    outcome(dev <= 1e-8 && count > 0, format!("{count} kernels, max dev {dev:.2e}"))
}

fn identities() -> Outcome {
    let mut dev = 0.0f64;
    for (_, k) in battery() {
        for p in PS {
            dev = dev.max(regularized_laplacian_identity_check(&k, p).unwrap().max());
        }
    }
    outcome(dev <= 1e-10, format!("max dev {dev:.2e}"))
}

fn betweenness() -> Outcome {
    let mut dev = 0.0f64;
    for seed in 0..50 {
        let mut rng = common::rng(500 + seed);
        let n = 5 + seed as usize % 8;
        let g = common::random_connected_graph(&mut rng, n, n, seed % 2 == 0);
        let w = g.costs();
        let got = edge_betweenness_weighted(&g, &w).unwrap().values;
        let want = common::brute_force_betweenness(&g, &w);
        for (a, b) in got.iter().zip(&want) {
            dev = dev.max((a - b).abs());
        }
    }
    outcome(dev <= 1e-9, format!("50 graphs, max dev {dev:.2e}"))
}

fn shortest_paths() -> Outcome {
    let mut dev = 0.0f64;
    for seed in 0..20 {
        let mut rng = common::rng(100 + seed);
        let g = common::random_connected_graph(&mut rng, 50, 80, seed % 2 == 0);
        let w = g.costs();
        let fw = common::floyd_warshall(&g, &w);
        for (s, row) in fw.iter().enumerate() {
            let d = dijkstra_sssp(&g, &w, s).unwrap();
            for (a, b) in d.iter().zip(row) {
                dev = dev.max((a - b).abs());
            }
        }
    }
    outcome(dev <= 1e-12, format!("20 seeds, max dev {dev:.2e}"))
}

fn lowrank() -> Outcome {
    let mut dev = 0.0f64;
    for (g, k) in battery().into_iter().take(10) {
        for p in PS {
            let dense = neighbor_probability_dense(&k, p).unwrap().edge_scores(&g);
            let low = edge_scores_lowrank(&k, p, g.node_count(), &g).unwrap();
            for (a, b) in dense.iter().zip(&low) {
                dev = dev.max((a - b).abs());
            }
        }
    }
    let sample = sample_swiss_roll(300, 1).unwrap();
    let g = build_ball_graph(&sample.clean_cloud(), 4.0).unwrap();
    let k = diffusion_kernel(&g, Epsilon::MedianHalf.resolve(&g).unwrap()).unwrap();
    let dense = neighbor_probability_dense(&k, 0.01).unwrap().edge_scores(&g);
    let low = edge_scores_lowrank(&k, 0.01, 20, &g).unwrap();
    let rho = spearman(&dense, &low);
    outcome(
        dev <= 1e-6 && rho >= LOWRANK_SPEARMAN_MIN,
        format!("J=n max dev {dev:.2e}; J=20 Spearman {rho:.3} (need {LOWRANK_SPEARMAN_MIN})"),
    )
}

fn rule(rule: Rule, q: f64) -> Estimator {
    Estimator::Rule { rule, q }
}

fn swiss_table() -> Outcome {
    let start = Instant::now();
    let cfg = BenchmarkConfig {
        mus: vec![0.10, 1.54, 1.85],
        estimators: vec![
            Estimator::ShortestPath,
            rule(Rule::Ecdr, 0.99),
            rule(Rule::Npdr, 0.92),
            rule(Rule::Npdr, 0.99),
        ],
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&cfg).unwrap();
    let e = |mu, est| report.mean_error(mu, est).unwrap();
    let sp_low = e(0.10, Estimator::ShortestPath);
    let (sp, ecdr, npdr) = (
        e(1.54, Estimator::ShortestPath),
        e(1.54, rule(Rule::Ecdr, 0.99)),
        e(1.54, rule(Rule::Npdr, 0.99)),
    );
    let (n92, n99) = (e(1.85, rule(Rule::Npdr, 0.92)), e(1.85, rule(Rule::Npdr, 0.99)));
    let a = sp_low <= 1.6;
    let b = npdr < ecdr && ecdr < sp && (1.0..=5.0).contains(&npdr);
    let c = n92 < n99;
    let t = start.elapsed();
    outcome(
        a && b && c && t < Duration::from_secs(300),
        format!(
            "(a) E_SP {sp_low:.2} {}; (b) NPDR {npdr:.2} ECDR {ecdr:.2} SP {sp:.2} {}; (c) NPDR.92 {n92:.2} NPDR.99 {n99:.2} {}; {t:.0?}",
            ok(a),
            ok(b),
            ok(c)
        ),
    )
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "not met"
    }
}

fn bridge_counts() -> Outcome {
    let mus = vec![1.44, 1.54, 1.64, 1.74, 1.85, 1.90];
    let cfg = BenchmarkConfig {
        mus: mus.clone(),
        estimators: vec![Estimator::ShortestPath],
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&cfg).unwrap();
    let medians: Vec<f64> = mus
        .iter()
        .map(|&mu| {
            let v: Vec<f64> = report
                .records_for(mu, Estimator::ShortestPath)
                .map(|r| r.bridges_true as f64)
                .collect();
            median(&v)
        })
        .collect();
    let increasing = medians.windows(2).all(|w| w[0] < w[1]);
    let at_154 = medians[1];
    outcome(
        increasing && (10.0..=35.0).contains(&at_154),
        format!("medians {medians:?}"),
    )
}

fn tomography() -> Outcome {
    let start = Instant::now();
    let reports: Vec<_> = (1..=5)
        .map(|seed| run_tomography(&TomoConfig { seed, ..TomoConfig::default() }).unwrap())
        .collect();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for r in &reports {
        let (jdr, npdr) = (&r.outcomes[1], &r.outcomes[2]);
        if npdr.disconnected <= jdr.disconnected {
            wins += 1;
        }
        pairs.push(format!("{}/{}", npdr.disconnected, jdr.disconnected));
    }
    let rho = |slot: usize| median(&reports.iter().map(|r| r.outcomes[slot].rho).collect::<Vec<_>>());
    let (rho_jdr, rho_npdr) = (rho(1), rho(2));
    let t = start.elapsed();
    outcome(
        wins >= 4 && rho_npdr >= rho_jdr && t < Duration::from_secs(600),
        format!(
            "disconnected NPDR/JDR {} ({wins}/5 seeds with NPDR <= JDR); median rho NPDR {rho_npdr:.4} JDR {rho_jdr:.4}; {t:.0?}",
            pairs.join(" ")
        ),
    )
}

fn fbp_sanity() -> Outcome {
    let phantom = shepp_logan(128).unwrap();
    let sino = random_sinogram(&phantom, 256, 128, f64::INFINITY, 1).unwrap();
    let rho = similarity_rho(&phantom, &fbp_true_angles(&sino, 128).unwrap()).unwrap();
    outcome(rho >= 0.9, format!("rho {rho:.4}"))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn determinism() -> Outcome {
    let swiss = || {
        let cfg = BenchmarkConfig {
            n: 250,
            mus: vec![0.10, 1.54],
            trials: 3,
            ..BenchmarkConfig::default()
        };
        let r = run_benchmark(&cfg).unwrap();
        format!("{}{}", r.trials_csv(), r.aggregate_csv())
    };
    let tomo = || {
        let cfg = TomoConfig {
            side: 64,
            n: 128,
            r: 64,
            k: 16,
            ..TomoConfig::default()
        };
        run_tomography(&cfg).unwrap().csv()
    };
    let swiss_same = in_pool(1, swiss) == in_pool(3, swiss);
    let tomo_same = in_pool(1, tomo) == in_pool(3, tomo);
    outcome(
        swiss_same && tomo_same,
        format!("swissroll CSV identical: {swiss_same}; tomo CSV identical: {tomo_same} (1 vs 3 threads)"),
    )
}

type Check = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Check; 12] = [
        ("spectral lemma", spectral_lemma),
        ("kernel spectrum", kernel_spectrum),
        ("series oracle", series_oracle),
        ("algebraic identities", identities),
        ("betweenness exactness", betweenness),
        ("shortest-path oracle", shortest_paths),
        ("low-rank fidelity", lowrank),
        ("swiss-roll table", swiss_table),
        ("bridge counts", bridge_counts),
        ("tomography desk scale", tomography),
        ("fbp sanity", fbp_sanity),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
