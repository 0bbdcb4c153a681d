//! Blind-angle tomography: a Shepp-Logan phantom is projected at unknown
//! random angles, the projections are ordered from the spectrum of their
//! (pruned) k-NN graph, and the image is rebuilt by filtered backprojection.
//!
//! Coordinates: the image covers `[-1, 1]^2`, row 0 at the top (`y = 1`),
//! column 0 at the left (`x = -1`). A projection at angle `theta` collects
//! line integrals over `x cos(theta) + y sin(theta) = s` for bin centers
//! `s` uniform in `[-1, 1]`.

use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, NNGraph, PointCloud, Rule};
use crate::linalg::{top_eigenpairs, SparseMatrix, DEFAULT_EIGEN_TOL};
use crate::rules::{detect, RuleConfig};
use crate::stats::{kendall_tau, median};

/// Modified Shepp-Logan (Toft): intensity, semi-axes `a`, `b`, center
/// `x0`, `y0`, rotation in degrees.
pub const SHEPP_LOGAN: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
];

/// True if `(x, y)` lies inside ellipse `e` of [`SHEPP_LOGAN`].
pub fn in_ellipse(e: &[f64; 6], x: f64, y: f64) -> bool {
    let [_, a, b, x0, y0, deg] = *e;
    let (s, c) = deg.to_radians().sin_cos();
    let (dx, dy) = (x - x0, y - y0);
    let u = dx * c + dy * s;
    let v = -dx * s + dy * c;
    (u / a).powi(2) + (v / b).powi(2) <= 1.0
}

/// Phantom intensity at a point.
pub fn shepp_logan_value(x: f64, y: f64) -> f64 {
    SHEPP_LOGAN
        .iter()
        .filter(|e| in_ellipse(e, x, y))
        .map(|e| e[0])
        .sum()
}

/// Square image on `[-1, 1]^2`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomImage {
    pub side: usize,
    pub pixels: Vec<f64>,
}

/// Center of pixel `k` along an axis of `side` pixels.
fn pixel_center(k: usize, side: usize) -> f64 {
    -1.0 + (k as f64 + 0.5) * 2.0 / side as f64
}

impl PhantomImage {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            pixels: vec![0.0; side * side],
        }
    }

    /// Samples `f(x, y)` at every pixel center.
    pub fn from_fn(side: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let pixels = (0..side * side)
            .into_par_iter()
            .map(|k| {
                let (row, col) = (k / side, k % side);
                f(pixel_center(col, side), -pixel_center(row, side))
            })
            .collect();
        Self { side, pixels }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }

    pub fn norm(&self) -> f64 {
        self.pixels.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Integral over `[-1, 1]^2` by the midpoint rule.
    pub fn mass(&self) -> f64 {
        let h = 2.0 / self.side as f64;
        self.pixels.iter().sum::<f64>() * h * h
    }

    /// Bilinear interpolation between pixel centers; zero outside.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let side = self.side as f64;
        let fc = (x + 1.0) * side / 2.0 - 0.5;
        let fr = (1.0 - y) * side / 2.0 - 0.5;
        if !(fc > -1.0 && fr > -1.0 && fc < side && fr < side) {
            return 0.0;
        }
        let (c0, r0) = (fc.floor(), fr.floor());
        let (tc, tr) = (fc - c0, fr - r0);
        let (c0, r0) = (c0 as isize, r0 as isize);
        let at = |r: isize, c: isize| {
            if r < 0 || c < 0 || r >= self.side as isize || c >= self.side as isize {
                0.0
            } else {
                self.pixels[r as usize * self.side + c as usize]
            }
        };
        (1.0 - tr) * ((1.0 - tc) * at(r0, c0) + tc * at(r0, c0 + 1))
            + tr * ((1.0 - tc) * at(r0 + 1, c0) + tc * at(r0 + 1, c0 + 1))
    }

    /// Counter-clockwise rotation by `degrees` about the origin: exact
    /// quarter turns, then three sinc-interpolated shears for the remainder
    /// in `[-45, 45]` on a zero-padded canvas. Content leaving the square is
    /// cropped.
    pub fn rotated(&self, degrees: f64) -> Self {
        let turns = (degrees / 90.0).round();
        let rest = (degrees - 90.0 * turns).to_radians();
        let mut img = self.clone();
        for _ in 0..(turns as i64).rem_euclid(4) {
            img = img.quarter_turn();
        }
        if rest == 0.0 {
            return img;
        }
        img.shear_rotate(rest)
    }

    /// Exact counter-clockwise rotation by 90 degrees.
    fn quarter_turn(&self) -> Self {
        let side = self.side;
        let mut pixels = vec![0.0; side * side];
        for r in 0..side {
            for c in 0..side {
                pixels[r * side + c] = self.pixels[c * side + side - 1 - r];
            }
        }
        Self { side, pixels }
    }

    fn shear_rotate(&self, phi: f64) -> Self {
        let side = self.side;
        // widest intermediate extent is side * (1 + tan(pi / 8)) < 1.5 side
        let len = side + 2 * side.div_ceil(4);
        let off = (len - side) / 2;
        let mut canvas = vec![Complex::new(0.0, 0.0); len * len];
        for r in 0..side {
            for c in 0..side {
                canvas[(r + off) * len + c + off].re = self.get(r, c);
            }
        }
        let mut planner = FftPlanner::<f64>::new();
        let shear = Shear {
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
            len,
            center: off as f64 + (side as f64 - 1.0) / 2.0,
        };
        let a = -(phi / 2.0).tan();
        let b = phi.sin();
        // rows shift right by a * y, columns shift up by b * x
        shear.rows(&mut canvas, a);
        transpose(&mut canvas, len);
        shear.rows(&mut canvas, b);
        transpose(&mut canvas, len);
        shear.rows(&mut canvas, a);
        let mut pixels = vec![0.0; side * side];
        for r in 0..side {
            for c in 0..side {
                pixels[r * side + c] = canvas[(r + off) * len + c + off].re;
            }
        }
        Self { side, pixels }
    }

    /// Mirror image under `x -> -x`.
    pub fn reflected_x(&self) -> Self {
        let side = self.side;
        let mut pixels = self.pixels.clone();
        for row in pixels.chunks_mut(side) {
            row.reverse();
        }
        Self { side, pixels }
    }

    /// 16-bit binary PGM, intensities mapped linearly from `[min, max]`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let lo = self.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        write!(w, "P5\n{} {}\n65535\n", self.side, self.side)?;
        let mut buf = Vec::with_capacity(2 * self.pixels.len());
        for &v in &self.pixels {
            let level = ((v - lo) / span * 65535.0).round() as u16;
            buf.extend_from_slice(&level.to_be_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

struct Shear {
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    len: usize,
    center: f64,
}

impl Shear {
    /// Shifts row `k` toward higher column index by `factor * y_k` pixels,
    /// where `y_k` is the row's height above the canvas center.
    fn rows(&self, canvas: &mut [Complex<f64>], factor: f64) {
        let len = self.len;
        for (k, row) in canvas.chunks_mut(len).enumerate() {
            if row.iter().all(|v| v.re == 0.0) {
                continue;
            }
            let shift = factor * (self.center - k as f64);
            self.fwd.process(row);
            for (f, v) in row.iter_mut().enumerate() {
                let freq = if 2 * f < len { f as f64 } else { f as f64 - len as f64 };
                if 2 * f == len {
                    // the Nyquist term stays real
                    *v *= (PI * shift).cos();
                } else {
                    *v *= Complex::from_polar(1.0, -TAU * freq * shift / len as f64);
                }
            }
            self.inv.process(row);
            for v in row.iter_mut() {
                *v = Complex::new(v.re / len as f64, 0.0);
            }
        }
    }
}

fn transpose(canvas: &mut [Complex<f64>], len: usize) {
    for r in 0..len {
        for c in r + 1..len {
            canvas.swap(r * len + c, c * len + r);
        }
    }
}

/// The modified Shepp-Logan phantom sampled at pixel centers.
pub fn shepp_logan(side: usize) -> Result<PhantomImage> {
    if side < 16 {
        return Err(Error::invalid(format!("phantom side must be >= 16 (got {side})")));
    }
    Ok(PhantomImage::from_fn(side, shepp_logan_value))
}

/// Line integrals at angle `theta` over `r` parallel rays, sampled
/// bilinearly every `1 / side` along each ray.
pub fn radon_project(image: &PhantomImage, theta: f64, r: usize) -> Result<Vec<f64>> {
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 bins (got {r})")));
    }
    Ok(project(image, theta, r))
}

fn project(image: &PhantomImage, theta: f64, r: usize) -> Vec<f64> {
    let (st, ct) = theta.sin_cos();
    let step = 1.0 / image.side as f64;
    // rays span the circumscribed circle of the square
    let half = (2f64.sqrt() / step).ceil() as isize;
    (0..r)
        .map(|j| {
            let s = pixel_center(j, r);
            let mut acc = 0.0;
            for m in -half..=half {
                let t = m as f64 * step;
                acc += image.sample(s * ct - t * st, s * st + t * ct);
            }
            acc * step
        })
        .collect()
}

/// Projections at random angles with additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub n: usize,
    pub r: usize,
    /// True angles in `[0, 2 pi)`.
    pub angles: Vec<f64>,
    /// Noiseless rows; absent when read back from a file.
    pub clean: Option<Vec<Vec<f64>>>,
    /// Observed rows.
    pub rows: Vec<Vec<f64>>,
    /// `f64::INFINITY` for no noise.
    pub snr_db: f64,
    pub seed: u64,
}

const SINOGRAM_MAGIC: &[u8; 8] = b"GDSINO01";

impl Sinogram {
    /// Mean squared entry of the clean rows.
    pub fn signal_power(&self) -> Option<f64> {
        self.clean.as_ref().map(|rows| mean_power(rows))
    }

    /// Magic, `n`, `r`, `snr_db`, `seed` (little endian), the observed rows
    /// row-major, then the angles.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(40 + 8 * self.n * (self.r + 1));
        buf.extend_from_slice(SINOGRAM_MAGIC);
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        buf.extend_from_slice(&(self.r as u64).to_le_bytes());
        buf.extend_from_slice(&self.snr_db.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        for v in self.rows.iter().flatten().chain(&self.angles) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let bad = |msg: &str| Error::Parse {
            line: 0,
            message: format!("sinogram file: {msg}"),
        };
        if bytes.len() < 40 || &bytes[..8] != SINOGRAM_MAGIC {
            return Err(bad("missing magic"));
        }
        let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().expect("8 bytes") };
        let n = u64::from_le_bytes(word(1)) as usize;
        let r = u64::from_le_bytes(word(2)) as usize;
        let snr_db = f64::from_le_bytes(word(3));
        let seed = u64::from_le_bytes(word(4));
        let expected = n
            .checked_mul(r + 1)
            .and_then(|c| c.checked_add(5))
            .and_then(|c| c.checked_mul(8));
        if expected != Some(bytes.len()) {
            return Err(bad("length does not match header"));
        }
        let values: Vec<f64> = (5..bytes.len() / 8).map(|k| f64::from_le_bytes(word(k))).collect();
        let rows = values[..n * r].chunks(r.max(1)).take(n).map(<[f64]>::to_vec).collect();
        Ok(Self {
            n,
            r,
            angles: values[n * r..].to_vec(),
            clean: None,
            rows,
            snr_db,
            seed,
        })
    }
}

fn mean_power(rows: &[Vec<f64>]) -> f64 {
    let count: usize = rows.iter().map(Vec::len).sum();
    rows.iter().flatten().map(|v| v * v).sum::<f64>() / count as f64
}

/// `n` projections at angles uniform on `[0, 2 pi)`, plus noise with
/// variance `sigma_f^2 / 10^(snr_db / 10)`. `snr_db = inf` adds none.
pub fn random_sinogram(
    image: &PhantomImage,
    n: usize,
    r: usize,
    snr_db: f64,
    seed: u64,
) -> Result<Sinogram> {
    if n < 8 {
        return Err(Error::invalid(format!("need at least 8 projections (got {n})")));
    }
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 bins (got {r})")));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!("bad SNR {snr_db}")));
    }
    let mut angle_rng = ChaCha8Rng::seed_from_u64(seed);
    let angles: Vec<f64> = (0..n).map(|_| angle_rng.random_range(0.0..TAU)).collect();
    let clean: Vec<Vec<f64>> = angles.par_iter().map(|&t| project(image, t, r)).collect();
    let mut rows = clean.clone();
    if snr_db.is_finite() {
        let sigma = (mean_power(&clean) / 10f64.powf(snr_db / 10.0)).sqrt();
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
        noise_rng.set_stream(1);
        for v in rows.iter_mut().flatten() {
            *v += normal.sample(&mut noise_rng);
        }
    }
    Ok(Sinogram {
        n,
        r,
        angles,
        clean: Some(clean),
        rows,
        snr_db,
        seed,
    })
}

/// Recovered angular order of the surviving projections.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularOrdering {
    /// Sinogram row ids in ascending `theta_hat`.
    pub order: Vec<usize>,
    /// Estimated angle of each entry of `order`, ascending.
    pub theta_hat: Vec<f64>,
    /// Rows dropped by pruning or outside the largest component.
    pub discarded: usize,
    /// Edges removed by the rule.
    pub flagged: usize,
}

impl AngularOrdering {
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Rows with their mean removed, as a point cloud.
pub fn preprocess(sinogram: &Sinogram) -> Result<PointCloud> {
    let rows = sinogram
        .rows
        .iter()
        .map(|row| {
            let m = row.iter().sum::<f64>() / row.len() as f64;
            row.iter().map(|v| v - m).collect()
        })
        .collect();
    PointCloud::new(rows)
}

/// k-NN graph on the preprocessed rows, optional pruning by `rule`, removal
/// of nodes left with fewer than two edges, then a circle embedding from
/// the two leading nontrivial eigenvectors of the row-normalized adjacency.
pub fn prune_and_order(
    sinogram: &Sinogram,
    k: usize,
    rule: Option<Rule>,
    cfg: &RuleConfig,
) -> Result<AngularOrdering> {
    let cloud = preprocess(sinogram)?;
    let graph = build_knn_graph(&cloud, k)?;
    let (pruned, flagged) = match rule {
        Some(rule) => {
            let bridges = detect(rule, &graph, cfg)?;
            (graph.without_edges(&bridges.edges), bridges.len())
        }
        None => (graph, 0),
    };
    let keep: Vec<usize> = (0..pruned.node_count()).filter(|&v| pruned.degree(v) >= 2).collect();
    let reduced = pruned.induced(&keep);
    let largest = reduced
        .components()
        .into_iter()
        .max_by_key(|c| c.len())
        .unwrap_or_default();
    if largest.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "only {} projections survive pruning",
            largest.len()
        )));
    }
    let survivors: Vec<usize> = largest.iter().map(|&v| keep[v]).collect();
    let core = reduced.induced(&largest);
    let theta = circle_embedding(&core)?;

    let mut idx: Vec<usize> = (0..survivors.len()).collect();
    idx.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]).then(a.cmp(&b)));
    Ok(AngularOrdering {
        order: idx.iter().map(|&i| survivors[i]).collect(),
        theta_hat: idx.iter().map(|&i| theta[i]).collect(),
        discarded: sinogram.n - survivors.len(),
        flagged,
    })
}

/// `atan2(phi_2, phi_1)` in `[0, 2 pi)` from the second and third right
/// eigenvectors of `Deg^{-1} Adj`.
fn circle_embedding(graph: &NNGraph) -> Result<Vec<f64>> {
    let n = graph.node_count();
    let degree: Vec<f64> = (0..n).map(|v| graph.degree(v) as f64).collect();
    let triplets = graph
        .edges()
        .iter()
        .flat_map(|e| [(e.i, e.j, 1.0 / degree[e.i]), (e.j, e.i, 1.0 / degree[e.j])])
        .collect();
    let w = SparseMatrix::from_triplets(n, n, triplets)?;
    let pairs = top_eigenpairs(&w, &degree, 3, DEFAULT_EIGEN_TOL)?;
    Ok(pairs.right[1]
        .iter()
        .zip(&pairs.right[2])
        .map(|(&a, &b)| b.atan2(a).rem_euclid(TAU))
        .collect())
}

/// Ram-Lak filtering of every row, applied as a product with the DFT of
/// the band-limited spatial kernel on a zero-padded grid.
pub fn ramp_filter(rows: &[Vec<f64>], r: usize) -> Vec<Vec<f64>> {
    let len = (2 * r).next_power_of_two();
    let ds = 2.0 / r as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(len);
    let ifft = planner.plan_fft_inverse(len);

    let mut kernel: Vec<Complex<f64>> = (0..len)
        .map(|k| {
            let m = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            let h = if m == 0.0 {
                1.0 / (4.0 * ds * ds)
            } else if (m as i64) % 2 != 0 {
                -1.0 / (PI * PI * m * m * ds * ds)
            } else {
                0.0
            };
            Complex::new(h, 0.0)
        })
        .collect();
    fft.process(&mut kernel);

    rows.iter()
        .map(|row| {
            let mut buf: Vec<Complex<f64>> = row
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
                .take(len)
                .collect();
            fft.process(&mut buf);
            for (b, k) in buf.iter_mut().zip(&kernel) {
                *b *= k;
            }
            ifft.process(&mut buf);
            buf[..r].iter().map(|c| c.re * ds / len as f64).collect()
        })
        .collect()
}

/// Filtered backprojection of `rows` taken at `angles` spanning a full turn.
pub fn fbp(rows: &[Vec<f64>], angles: &[f64], r: usize, side: usize) -> PhantomImage {
    let filtered = ramp_filter(rows, r);
    let weight = PI / angles.len() as f64;
    let trig: Vec<(f64, f64)> = angles.iter().map(|t| t.sin_cos()).collect();
    PhantomImage::from_fn(side, |x, y| {
        let mut acc = 0.0;
        for (q, &(st, ct)) in filtered.iter().zip(&trig) {
            // fractional bin index of s = x cos + y sin
            let f = (x * ct + y * st + 1.0) * r as f64 / 2.0 - 0.5;
            let j = f.floor();
            let t = f - j;
            let j = j as isize;
            let at = |k: isize| {
                if k < 0 || k >= r as isize {
                    0.0
                } else {
                    q[k as usize]
                }
            };
            acc += (1.0 - t) * at(j) + t * at(j + 1);
        }
        acc * weight
    })
}

/// Reconstruction from the ordered rows, placed at equispaced angles over
/// `[0, 2 pi)`.
pub fn fbp_reconstruct(
    ordering: &AngularOrdering,
    sinogram: &Sinogram,
    side: usize,
) -> Result<PhantomImage> {
    let m = ordering.len();
    if m < 8 {
        return Err(Error::InsufficientData(format!(
            "reconstruction needs at least 8 projections (got {m})"
        )));
    }
    let rows: Vec<Vec<f64>> = ordering.order.iter().map(|&i| sinogram.rows[i].clone()).collect();
    let angles: Vec<f64> = (0..m).map(|i| TAU * i as f64 / m as f64).collect();
    Ok(fbp(&rows, &angles, sinogram.r, side))
}

/// Reconstruction at the true angles, the reference for blind orderings.
pub fn fbp_true_angles(sinogram: &Sinogram, side: usize) -> Result<PhantomImage> {
    if sinogram.n < 8 {
        return Err(Error::InsufficientData(format!(
            "reconstruction needs at least 8 projections (got {})",
            sinogram.n
        )));
    }
    Ok(fbp(&sinogram.rows, &sinogram.angles, sinogram.r, side))
}

/// `<a, b> / (|a| |b|)` without alignment.
pub fn normalized_inner(a: &PhantomImage, b: &PhantomImage) -> Result<f64> {
    if a.side != b.side {
        return Err(Error::invalid("images differ in size"));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::UndefinedSimilarity);
    }
    let dot: f64 = a.pixels.iter().zip(&b.pixels).map(|(x, y)| x * y).sum();
    Ok(dot / (na * nb))
}

/// Best normalized inner product of `reference` with `estimate` rotated in
/// 1 degree steps, with and without reflection.
pub fn similarity_rho(reference: &PhantomImage, estimate: &PhantomImage) -> Result<f64> {
    normalized_inner(reference, estimate)?;
    let mirrored = estimate.reflected_x();
    let scores: Vec<f64> = (0..720)
        .into_par_iter()
        .map(|k| {
            let base = if k < 360 { estimate } else { &mirrored };
            let candidate = base.rotated((k % 360) as f64);
            // rotation can push all mass off the grid only for degenerate input
            normalized_inner(reference, &candidate).unwrap_or(f64::NEG_INFINITY)
        })
        .collect();
    Ok(scores.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Kendall tau between the recovered order and the true angles, maximized
/// over the `2 m` circular shifts and reversals of the order.
pub fn circular_kendall(ordering: &AngularOrdering, true_angles: &[f64]) -> f64 {
    let m = ordering.len();
    let t: Vec<f64> = ordering.order.iter().map(|&i| true_angles[i]).collect();
    let pos: Vec<f64> = (0..m).map(|i| i as f64).collect();
    (0..2 * m)
        .into_par_iter()
        .map(|a| {
            let (shift, reverse) = (a % m, a >= m);
            let seq: Vec<f64> = (0..m)
                .map(|i| {
                    let k = if reverse { (shift + m - i) % m } else { (shift + i) % m };
                    (t[k] - t[shift]).rem_euclid(TAU)
                })
                .collect();
            kendall_tau(&pos, &seq)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Desk-scale tomography benchmark settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoConfig {
    pub side: usize,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub snr_db: f64,
    pub seed: u64,
    /// Coarse JDR grid; the best `q` by `rho` is kept.
    pub jdr_grid: Vec<f64>,
    /// NPDR settings.
    pub npdr: RuleConfig,
}

impl Default for TomoConfig {
    fn default() -> Self {
        Self {
            side: 128,
            n: 256,
            r: 128,
            k: 32,
            snr_db: -2.0,
            seed: 1,
            jdr_grid: vec![0.70, 0.74, 0.78, 0.82],
            npdr: RuleConfig {
                q: 0.8,
                p: 0.01,
                epsilon: crate::kernels::Epsilon::Infinite,
                ..RuleConfig::default()
            },
        }
    }
}

/// Outcome of one pruning method.
#[derive(Debug, Clone, PartialEq)]
pub struct TomoOutcome {
    /// `None` for the unpruned baseline.
    pub rule: Option<Rule>,
    pub q: Option<f64>,
    pub flagged: usize,
    pub disconnected: usize,
    pub rho: f64,
    pub kendall: f64,
    pub ordering: AngularOrdering,
    pub image: PhantomImage,
}

impl TomoOutcome {
    pub fn label(&self) -> &'static str {
        self.rule.map_or("none", Rule::name)
    }
}

#[derive(Debug, Clone)]
pub struct TomoReport {
    pub config: TomoConfig,
    pub phantom: PhantomImage,
    pub sinogram: Sinogram,
    pub signal_power: f64,
    /// Unpruned first, then one entry per requested rule.
    pub outcomes: Vec<TomoOutcome>,
    /// Reconstruction from the observed rows at their true angles.
    pub true_angles_rho: f64,
}

impl TomoReport {
    /// Config as `#` comment lines.
    pub fn header(&self) -> String {
        let c = &self.config;
        let grid: Vec<String> = c.jdr_grid.iter().map(|q| q.to_string()).collect();
        format!(
            "# tomo side={} n={} r={} k={} snr_db={} seed={}\n# jdr_grid={} npdr_q={} p={} epsilon={}\n",
            c.side,
            c.n,
            c.r,
            c.k,
            c.snr_db,
            c.seed,
            grid.join(","),
            c.npdr.q,
            c.npdr.p,
            c.npdr.epsilon
        )
    }

    /// One row per method plus the true-angle reference (no header comments).
    pub fn csv(&self) -> String {
        let mut s = String::from("seed,method,q,flagged,disconnected,rho,kendall\n");
        for o in &self.outcomes {
            let q = o.q.map(|q| q.to_string()).unwrap_or_else(|| "NA".into());
            s += &format!(
                "{},{},{},{},{},{:.6},{:.6}\n",
                self.config.seed,
                o.label(),
                q,
                o.flagged,
                o.disconnected,
                o.rho,
                o.kendall
            );
        }
        s += &format!(
            "{},true-angles,NA,0,0,{:.6},1.000000\n",
            self.config.seed, self.true_angles_rho
        );
        s
    }
}

fn outcome(
    phantom: &PhantomImage,
    sino: &Sinogram,
    cfg: &TomoConfig,
    rule: Option<Rule>,
    rcfg: &RuleConfig,
) -> Result<TomoOutcome> {
    let ordering = prune_and_order(sino, cfg.k, rule, rcfg)?;
    let image = fbp_reconstruct(&ordering, sino, cfg.side)?;
    Ok(TomoOutcome {
        rule,
        q: rule.map(|_| rcfg.q),
        flagged: ordering.flagged,
        disconnected: ordering.discarded,
        rho: similarity_rho(phantom, &image)?,
        kendall: circular_kendall(&ordering, &sino.angles),
        ordering,
        image,
    })
}

/// Runs the unpruned baseline, JDR over its grid and NPDR on one sinogram.
pub fn run_tomography(cfg: &TomoConfig) -> Result<TomoReport> {
    run_tomography_with(cfg, &[Rule::Jdr, Rule::Npdr])
}

/// Unpruned baseline followed by each of `rules`. JDR uses the best `q` of
/// its grid; any other rule uses the NPDR settings.
pub fn run_tomography_with(cfg: &TomoConfig, rules: &[Rule]) -> Result<TomoReport> {
    if cfg.jdr_grid.is_empty() && rules.contains(&Rule::Jdr) {
        return Err(Error::invalid("JDR grid is empty"));
    }
    let phantom = shepp_logan(cfg.side)?;
    let sinogram = random_sinogram(&phantom, cfg.n, cfg.r, cfg.snr_db, cfg.seed)?;
    let mut outcomes = vec![outcome(&phantom, &sinogram, cfg, None, &cfg.npdr)?];
    for &rule in rules {
        if rule == Rule::Jdr {
            let mut best: Option<TomoOutcome> = None;
            for &q in &cfg.jdr_grid {
                let o = outcome(&phantom, &sinogram, cfg, Some(Rule::Jdr), &cfg.npdr.with_q(q))?;
                if best.as_ref().is_none_or(|b| o.rho > b.rho) {
                    best = Some(o);
                }
            }
            outcomes.push(best.expect("grid is not empty"));
        } else {
            outcomes.push(outcome(&phantom, &sinogram, cfg, Some(rule), &cfg.npdr)?);
        }
    }
    let true_angles_rho = similarity_rho(&phantom, &fbp_true_angles(&sinogram, cfg.side)?)?;
    Ok(TomoReport {
        true_angles_rho,
        config: cfg.clone(),
        signal_power: sinogram.signal_power().unwrap_or(0.0),
        phantom,
        sinogram,
        outcomes,
    })
}

/// Median of a statistic across reports, per outcome position.
pub fn median_over(reports: &[TomoReport], slot: usize, stat: impl Fn(&TomoOutcome) -> f64) -> f64 {
    let v: Vec<f64> = reports.iter().map(|r| stat(&r.outcomes[slot])).collect();
    median(&v)
}
