//! Noisy Swiss-roll benchmark.
//!
//! The roll is `f(a, b) = (a cos a, b, a sin a)` on `[pi, 4 pi] x [0, 21]`.
//! A single clean sample is drawn once; each trial perturbs it along the
//! surface normals with amplitude `mu`, builds a delta-ball graph, runs the
//! decision rules and scores the adjusted geodesics from five reference
//! nodes against the true geodesics.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{build_ball_graph, BridgeSet, NNGraph, PenalizedGraph, PointCloud, Rule};
use crate::paths::{adjusted_geodesics, geodesics};
use crate::rules::{self, EcdrBasis, EdgeStatistic, NpdrMode, RuleConfig};
use crate::kernels::Epsilon;
use crate::stats::{mean, median};

pub const A_MIN: f64 = PI;
pub const A_MAX: f64 = 4.0 * PI;
pub const B_MIN: f64 = 0.0;
pub const B_MAX: f64 = 21.0;

pub const QUAD_TOL: f64 = 1e-8;
pub const QUAD_MAX_DEPTH: u32 = 40;

/// Anchors in parameter space used to pick the five reference nodes.
pub const REFERENCE_ANCHORS: [(f64, f64); 5] = [
    (1.5 * PI, 5.25),
    (1.5 * PI, 15.75),
    (2.5 * PI, 10.5),
    (3.5 * PI, 5.25),
    (3.5 * PI, 15.75),
];

pub fn embed(a: f64, b: f64) -> [f64; 3] {
    [a * a.cos(), b, a * a.sin()]
}

pub fn tangent_a(a: f64) -> [f64; 3] {
    [a.cos() - a * a.sin(), 0.0, a.sin() + a * a.cos()]
}

pub const TANGENT_B: [f64; 3] = [0.0, 1.0, 0.0];

/// Unit normal `df/da x df/db`, normalized.
pub fn normal(a: f64) -> [f64; 3] {
    let t = tangent_a(a);
    // t x (0, 1, 0) = (-t_z, 0, t_x)
    let c = [-t[2], 0.0, t[0]];
    let len = (c[0] * c[0] + c[2] * c[2]).sqrt();
    [c[0] / len, 0.0, c[2] / len]
}

#[derive(Debug, Clone)]
pub struct SwissRollSample {
    pub params: Vec<(f64, f64)>,
    pub clean: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub seed: u64,
}

impl SwissRollSample {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn clean_cloud(&self) -> PointCloud {
        to_cloud(&self.clean, &self.params)
    }

    /// Nodes closest (in the ambient space) to each anchor, distinct.
    pub fn reference_nodes(&self) -> Vec<usize> {
        let mut chosen: Vec<usize> = Vec::with_capacity(REFERENCE_ANCHORS.len());
        for &(a, b) in &REFERENCE_ANCHORS {
            let target = embed(a, b);
            let best = (0..self.len())
                .filter(|i| !chosen.contains(i))
                .min_by(|&i, &j| {
                    dist3(&self.clean[i], &target).total_cmp(&dist3(&self.clean[j], &target))
                })
                .expect("sample has more nodes than anchors");
            chosen.push(best);
        }
        chosen
    }
}

fn dist3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn to_cloud(points: &[[f64; 3]], params: &[(f64, f64)]) -> PointCloud {
    PointCloud::with_latent(
        points.iter().map(|p| p.to_vec()).collect(),
        params.iter().map(|&(a, b)| vec![a, b]).collect(),
    )
    .expect("swiss roll points are finite and three-dimensional")
}

/// Draws `n` points uniformly with respect to surface area. The first
/// point is pinned to `(a, b) = (pi, 0)`.
pub fn sample_swiss_roll(n: usize, seed: u64) -> Result<SwissRollSample> {
    if n < 2 {
        return Err(Error::invalid("a Swiss roll sample needs n >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::with_capacity(n);
    params.push((A_MIN, B_MIN));
    // area element |df/da x df/db| = sqrt(1 + a^2), maximal at A_MAX
    let peak = (1.0 + A_MAX * A_MAX).sqrt();
    while params.len() < n {
        let a = rng.random_range(A_MIN..A_MAX);
        if rng.random::<f64>() * peak <= (1.0 + a * a).sqrt() {
            let b = rng.random_range(B_MIN..B_MAX);
            params.push((a, b));
        }
    }
    let clean = params.iter().map(|&(a, b)| embed(a, b)).collect();
    let normals = params.iter().map(|&(a, _)| normal(a)).collect();
    Ok(SwissRollSample {
        params,
        clean,
        normals,
        seed,
    })
}

/// Uniform `[-1, 1]` draws, one per sample point, for one trial.
pub fn noise_draws(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[derive(Debug, Clone)]
pub struct NoiseRealization {
    pub mu: f64,
    pub u: Vec<f64>,
    pub noisy: Vec<[f64; 3]>,
}

/// `y_i = x_i + mu u_i n_i`. With `mu == 0` the clean points are returned
/// unchanged.
pub fn apply_noise(sample: &SwissRollSample, mu: f64, u: Vec<f64>) -> NoiseRealization {
    assert_eq!(u.len(), sample.len(), "one draw per point");
    let noisy = if mu == 0.0 {
        sample.clean.clone()
    } else {
        sample
            .clean
            .iter()
            .zip(&sample.normals)
            .zip(&u)
            .map(|((x, nv), &ui)| {
                [
                    x[0] + mu * ui * nv[0],
                    x[1] + mu * ui * nv[1],
                    x[2] + mu * ui * nv[2],
                ]
            })
            .collect()
    };
    NoiseRealization { mu, u, noisy }
}

impl NoiseRealization {
    pub fn cloud(&self, sample: &SwissRollSample) -> PointCloud {
        to_cloud(&self.noisy, &sample.params)
    }
}

/// Length of the image of the straight parameter-space segment between
/// `from` and `to`: the integral over `t` of `|Df(v(t)) v'(t)|`.
pub fn true_geodesic(from: (f64, f64), to: (f64, f64)) -> f64 {
    let da = to.0 - from.0;
    let db = to.1 - from.1;
    if da == 0.0 {
        return db.abs();
    }
    // |df/da|^2 = 1 + a^2 and df/da is orthogonal to df/db
    let speed = |t: f64| {
        let a = from.0 + t * da;
        (da * da * (1.0 + a * a) + db * db).sqrt()
    };
    adaptive_simpson(&speed, 0.0, 1.0, QUAD_TOL, QUAD_MAX_DEPTH)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// True geodesics from each reference node to every node.
pub fn true_geodesics(sample: &SwissRollSample, refs: &[usize]) -> Vec<Vec<f64>> {
    refs.iter()
        .map(|&r| {
            sample
                .params
                .iter()
                .map(|&p| true_geodesic(sample.params[r], p))
                .collect()
        })
        .collect()
}

/// Largest true geodesic over the parameter domain; caps the error of an
/// unreachable node.
pub fn geodesic_diameter() -> f64 {
    true_geodesic((A_MIN, B_MIN), (A_MAX, B_MAX)).max(true_geodesic((A_MIN, B_MAX), (A_MAX, B_MIN)))
}

/// Mean absolute error `E = sum |g - g~| / (rows * n)`. Infinite estimates
/// contribute `cap`; returns `(E, number of infinite estimates)`.
pub fn mean_error(true_g: &[Vec<f64>], est_g: &[Vec<f64>], cap: f64) -> (f64, usize) {
    assert_eq!(true_g.len(), est_g.len(), "row count mismatch");
    let mut total = 0.0;
    let mut count = 0usize;
    let mut unreachable = 0usize;
    for (t, e) in true_g.iter().zip(est_g) {
        assert_eq!(t.len(), e.len(), "column count mismatch");
        for (&g, &h) in t.iter().zip(e) {
            if h.is_finite() {
                total += (g - h).abs();
            } else {
                total += cap;
                unreachable += 1;
            }
            count += 1;
        }
    }
    (total / count as f64, unreachable)
}

/// Ground-truth bridge count: edges whose true geodesic exceeds `factor`
/// times their ambient length.
pub fn count_bridges(graph: &NNGraph, sample: &SwissRollSample, factor: f64) -> Result<usize> {
    if factor.is_nan() || factor <= 1.0 {
        return Err(Error::invalid(format!("bridge factor must exceed 1 (got {factor})")));
    }
    Ok(true_bridges(graph, sample, factor).len())
}

/// Edge indices labeled as bridges by the latent-parameter ground truth.
pub fn true_bridges(graph: &NNGraph, sample: &SwissRollSample, factor: f64) -> Vec<usize> {
    graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| true_geodesic(sample.params[e.i], sample.params[e.j]) > factor * e.cost)
        .map(|(k, _)| k)
        .collect()
}

/// Geodesic estimator scored by the benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    /// Plain shortest paths.
    ShortestPath,
    Rule { rule: Rule, q: f64 },
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::ShortestPath => "sp",
            Estimator::Rule { rule, .. } => rule.name(),
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self {
            Estimator::ShortestPath => None,
            Estimator::Rule { q, .. } => Some(*q),
        }
    }

    fn q_text(&self) -> String {
        self.q().map(|q| q.to_string()).unwrap_or_else(|| "NA".into())
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkConfig {
    pub n: usize,
    pub delta: f64,
    pub mus: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub trials: usize,
    pub seed: u64,
    /// Shared parameters for the rules (its `q` is overridden per estimator).
    pub rule: RuleConfig,
    pub bridge_factor: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let mut estimators = vec![
            Estimator::ShortestPath,
            Estimator::Rule {
                rule: Rule::Ldr,
                q: 0.92,
            },
        ];
        for rule in [Rule::Ecdr, Rule::Npdr] {
            for q in [0.92, 0.95, 0.99] {
                estimators.push(Estimator::Rule { rule, q });
            }
        }
        Self {
            n: 500,
            delta: 4.0,
            mus: vec![0.10, 1.44, 1.54, 1.64, 1.74, 1.85],
            estimators,
            trials: 20,
            seed: 1,
            rule: RuleConfig {
                q: 0.99,
                rounds: 15,
                ecdr_basis: EcdrBasis::Edges,
                p: 0.01,
                epsilon: Epsilon::MedianHalf,
                rank: None,
                mode: NpdrMode::Auto,
            },
            bridge_factor: 5.0,
        }
    }
}

/// One `(mu, estimator, trial)` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub mu: f64,
    pub estimator: Estimator,
    pub trial: usize,
    pub error: f64,
    pub bridges_flagged: usize,
    pub bridges_true: usize,
    /// Reference-to-node estimates that were unreachable.
    pub disconnected: usize,
}

/// Quantiles over trials of the estimates from node 0, nodes sorted by
/// their true geodesic from node 0.
#[derive(Debug, Clone)]
pub struct EstimateProfile {
    pub mu: f64,
    pub estimator: Estimator,
    pub nodes: Vec<usize>,
    pub truth: Vec<f64>,
    pub q33: Vec<f64>,
    pub median: Vec<f64>,
    pub q66: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Aggregate {
    pub mu: f64,
    pub estimator: Estimator,
    pub trials: usize,
    pub mean_error: f64,
    pub median_error: f64,
    pub median_flagged: f64,
    pub median_true: f64,
    pub disconnected_trials: usize,
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub config: BenchmarkConfig,
    pub reference_nodes: Vec<usize>,
    pub records: Vec<TrialRecord>,
    pub profiles: Vec<EstimateProfile>,
}

/// Per-trial generator: the master seed with the trial index as stream.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

struct TrialOutput {
    records: Vec<TrialRecord>,
    // per estimator: estimates from node 0
    from_origin: Vec<Vec<f64>>,
}

pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::invalid("no estimators requested"));
    }
    for est in &cfg.estimators {
        if let Estimator::Rule { q, .. } = est {
            cfg.rule.with_q(*q).validate()?;
        }
    }
    let sample = sample_swiss_roll(cfg.n, cfg.seed)?;
    let refs = sample.reference_nodes();
    let mut sources = refs.clone();
    sources.push(0);
    let truth_all = true_geodesics(&sample, &sources);
    let truth = &truth_all[..refs.len()];
    let cap = geodesic_diameter();
    // noise draws depend on the trial only, so every mu reuses them
    let draws: Vec<Vec<f64>> = (0..cfg.trials)
        .map(|t| noise_draws(cfg.n, &mut trial_rng(cfg.seed, t)))
        .collect();

    let mut records = Vec::new();
    let mut profiles = Vec::new();
    for &mu in &cfg.mus {
        let outputs: Vec<TrialOutput> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, &sample, &sources, truth, cap, mu, t, draws[t].clone()))
            .collect::<Result<_>>()?;
        for (k, est) in cfg.estimators.iter().enumerate() {
            let rows: Vec<&Vec<f64>> = outputs.iter().map(|o| &o.from_origin[k]).collect();
            profiles.push(profile(mu, *est, &truth_all[refs.len()], &rows));
        }
        for out in outputs {
            records.extend(out.records);
        }
    }
    Ok(BenchmarkReport {
        config: cfg.clone(),
        reference_nodes: refs,
        records,
        profiles,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    cfg: &BenchmarkConfig,
    sample: &SwissRollSample,
    sources: &[usize],
    truth: &[Vec<f64>],
    cap: f64,
    mu: f64,
    trial: usize,
    u: Vec<f64>,
) -> Result<TrialOutput> {
    let noise = apply_noise(sample, mu, u);
    let graph = build_ball_graph(&noise.cloud(sample), cfg.delta)?;
    let bridges_true = true_bridges(&graph, sample, cfg.bridge_factor).len();
    let n_refs = truth.len();

    let mut npdr_scores: Option<EdgeStatistic> = None;
    let mut records = Vec::with_capacity(cfg.estimators.len());
    let mut from_origin = Vec::with_capacity(cfg.estimators.len());
    for est in &cfg.estimators {
        let (estimates, flagged) = match *est {
            Estimator::ShortestPath => (geodesics(&graph, sources)?, 0),
            Estimator::Rule { rule, q } => {
                let rc = cfg.rule.with_q(q);
                let bridges = match rule {
                    Rule::Npdr => {
                        if npdr_scores.is_none() {
                            npdr_scores = Some(rules::npdr_scores(&graph, &rc)?);
                        }
                        let scores = npdr_scores.as_ref().expect("computed above");
                        BridgeSet::from_indices(&graph, scores.below(1.0 - q)?, Rule::Npdr, q)
                    }
                    other => rules::detect(other, &graph, &rc)?,
                };
                let pg = PenalizedGraph::new(&graph, &bridges)?;
                (adjusted_geodesics(&pg, sources)?, bridges.len())
            }
        };
        let (error, disconnected) = mean_error(truth, &estimates[..n_refs], cap);
        records.push(TrialRecord {
            mu,
            estimator: *est,
            trial,
            error,
            bridges_flagged: flagged,
            bridges_true,
            disconnected,
        });
        from_origin.push(estimates[n_refs].clone());
    }
    Ok(TrialOutput {
        records,
        from_origin,
    })
}

fn profile(mu: f64, estimator: Estimator, truth: &[f64], rows: &[&Vec<f64>]) -> EstimateProfile {
    let mut nodes: Vec<usize> = (0..truth.len()).collect();
    nodes.sort_by(|&a, &b| truth[a].total_cmp(&truth[b]).then(a.cmp(&b)));
    let mut q33 = Vec::with_capacity(nodes.len());
    let mut med = Vec::with_capacity(nodes.len());
    let mut q66 = Vec::with_capacity(nodes.len());
    for &v in &nodes {
        let vals: Vec<f64> = rows.iter().map(|r| r[v]).collect();
        q33.push(rules::quantile(&vals, 0.33).expect("nonempty"));
        med.push(median(&vals));
        q66.push(rules::quantile(&vals, 0.66).expect("nonempty"));
    }
    EstimateProfile {
        mu,
        estimator,
        truth: nodes.iter().map(|&v| truth[v]).collect(),
        nodes,
        q33,
        median: med,
        q66,
    }
}

impl BenchmarkReport {
    pub fn records_for(&self, mu: f64, estimator: Estimator) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.mu == mu && r.estimator == estimator)
    }

    pub fn aggregate(&self, mu: f64, estimator: Estimator) -> Option<Aggregate> {
        let recs: Vec<&TrialRecord> = self.records_for(mu, estimator).collect();
        if recs.is_empty() {
            return None;
        }
        let errors: Vec<f64> = recs.iter().map(|r| r.error).collect();
        let flagged: Vec<f64> = recs.iter().map(|r| r.bridges_flagged as f64).collect();
        let truth: Vec<f64> = recs.iter().map(|r| r.bridges_true as f64).collect();
        Some(Aggregate {
            mu,
            estimator,
            trials: recs.len(),
            mean_error: mean(&errors),
            median_error: median(&errors),
            median_flagged: median(&flagged),
            median_true: median(&truth),
            disconnected_trials: recs.iter().filter(|r| r.disconnected > 0).count(),
        })
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        let mut out = Vec::new();
        for &mu in &self.config.mus {
            for est in &self.config.estimators {
                out.extend(self.aggregate(mu, *est));
            }
        }
        out
    }

    pub fn mean_error(&self, mu: f64, estimator: Estimator) -> Option<f64> {
        self.aggregate(mu, estimator).map(|a| a.mean_error)
    }

    /// Config as `#` comment lines.
    pub fn header(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "# swissroll n={} delta={} trials={} seed={}", c.n, c.delta, c.trials, c.seed);
        let _ = writeln!(
            s,
            "# rounds={} p={} epsilon={} bridge_factor={}",
            c.rule.rounds, c.rule.p, c.rule.epsilon, c.bridge_factor
        );
        let mus: Vec<String> = c.mus.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "# mu={}", mus.join(","));
        let refs: Vec<String> = self.reference_nodes.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "# reference_nodes={}", refs.join(","));
        s
    }

    /// Per-trial CSV body (no header comments).
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("mu,rule,q,trial,E,bridges_flagged,bridges_true,disconnected\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{},{},{}",
                r.mu,
                r.estimator.label(),
                r.estimator.q_text(),
                r.trial,
                r.error,
                r.bridges_flagged,
                r.bridges_true,
                r.disconnected
            );
        }
        s
    }

    /// Aggregate CSV body (no header comments).
    pub fn aggregate_csv(&self) -> String {
        let mut s = String::from(
            "mu,rule,q,trials,mean_E,median_E,median_flagged,median_true,disconnected_trials\n",
        );
        for a in self.aggregates() {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{:.6},{},{},{}",
                a.mu,
                a.estimator.label(),
                a.estimator.q_text(),
                a.trials,
                a.mean_error,
                a.median_error,
                a.median_flagged,
                a.median_true,
                a.disconnected_trials
            );
        }
        s
    }

    /// Whitespace-separated profile data (one block per `mu`/estimator,
    /// blocks separated by blank lines for gnuplot `index`).
    pub fn profiles_dat(&self) -> String {
        let mut s = String::new();
        for p in &self.profiles {
            let _ = writeln!(s, "# mu={} rule={} q={}", p.mu, p.estimator.label(), p.estimator.q_text());
            let _ = writeln!(s, "# rank node true q33 median q66");
            for k in 0..p.nodes.len() {
                let _ = writeln!(
                    s,
                    "{} {} {:.6} {:.6} {:.6} {:.6}",
                    k, p.nodes[k], p.truth[k], p.q33[k], p.median[k], p.q66[k]
                );
            }
            s.push_str("\n\n");
        }
        s
    }

    /// Mean-error table: one row per `mu`, columns SP, LDR, ECDR and NPDR
    /// at each configured `q`.
    pub fn mean_error_table(&self) -> String {
        let mut groups: BTreeMap<(usize, &'static str), Vec<Estimator>> = BTreeMap::new();
        let order = |label: &str| match label {
            "sp" => 0,
            "ldr" => 1,
            "jdr" => 2,
            "ecdr" => 3,
            _ => 4,
        };
        for est in &self.config.estimators {
            groups
                .entry((order(est.label()), est.label()))
                .or_default()
                .push(*est);
        }
        let mut head1 = format!("{:>6} |", "mu");
        let mut head2 = format!("{:>6} |", "");
        let mut columns = Vec::new();
        for ((_, label), ests) in &groups {
            let width = 7 * ests.len();
            let _ = write!(head1, "{:^width$}|", label.to_uppercase());
            for e in ests {
                let _ = write!(head2, "{:>6} ", e.q().map(|q| format!("{q:.2}")).unwrap_or_default());
                columns.push(*e);
            }
            head2.push('|');
        }
        let mut s = format!("{head1}\n{head2}\n{}\n", "-".repeat(head2.len()));
        for &mu in &self.config.mus {
            let _ = write!(s, "{mu:>6.2} |");
            let mut col = 0;
            for ests in groups.values() {
                for _ in ests {
                    let e = self.mean_error(mu, columns[col]).unwrap_or(f64::NAN);
                    let _ = write!(s, "{e:>6.1} ");
                    col += 1;
                }
                s.push('|');
            }
            s.push('\n');
        }
        s
    }
}
