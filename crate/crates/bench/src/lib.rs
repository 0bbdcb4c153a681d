//! Fixtures shared by the criterion benches.

use geodenoise::swissroll::{apply_noise, noise_draws, sample_swiss_roll, trial_rng};
use geodenoise::{build_ball_graph, diffusion_kernel, DiffusionKernel, Epsilon, NNGraph};

/// Ball graph (`delta = 4`) on a noisy Swiss roll of `n` points.
pub fn swiss_roll_graph(n: usize, mu: f64) -> NNGraph {
    let sample = sample_swiss_roll(n, 1).expect("valid size");
    let u = noise_draws(n, &mut trial_rng(1, 0));
    let cloud = apply_noise(&sample, mu, u).cloud(&sample);
    build_ball_graph(&cloud, 4.0).expect("valid radius")
}

/// Diffusion kernel with the median-half scale on `graph`.
pub fn kernel(graph: &NNGraph) -> DiffusionKernel {
    let eps = Epsilon::MedianHalf.resolve(graph).expect("positive median");
    diffusion_kernel(graph, eps).expect("valid kernel")
}
