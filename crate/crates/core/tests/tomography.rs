mod common;

use std::f64::consts::TAU;

use geodenoise::rules::RuleConfig;
use geodenoise::tomography::{
    circular_kendall, fbp_reconstruct, fbp_true_angles, prune_and_order, random_sinogram,
    shepp_logan, similarity_rho, AngularOrdering, PhantomImage, Sinogram,
};
use geodenoise::Rule;
use rand::Rng;

fn sorted_ordering(sino: &Sinogram) -> AngularOrdering {
    let mut order: Vec<usize> = (0..sino.n).collect();
    order.sort_by(|&a, &b| sino.angles[a].total_cmp(&sino.angles[b]));
    AngularOrdering {
        theta_hat: order.iter().map(|&i| sino.angles[i]).collect(),
        order,
        discarded: 0,
        flagged: 0,
    }
}

#[test]
fn rho_ignores_rotation_and_reflection() {
    let img = shepp_logan(96).unwrap();
    assert!(similarity_rho(&img, &img.rotated(37.0)).unwrap() >= 0.99);
    assert!(similarity_rho(&img, &img.reflected_x().rotated(200.0)).unwrap() >= 0.99);
    let blank = PhantomImage::zeros(96);
    assert!(similarity_rho(&img, &blank).is_err());
}

#[test]
fn sorted_order_beats_a_shuffled_order() {
    let img = shepp_logan(64).unwrap();
    let sino = random_sinogram(&img, 128, 64, f64::INFINITY, 3).unwrap();
    let sorted = sorted_ordering(&sino);
    let mut shuffled = sorted.clone();
    let mut rng = common::rng(4);
    for i in (1..shuffled.order.len()).rev() {
        shuffled.order.swap(i, rng.random_range(0..=i));
    }
    let good = similarity_rho(&img, &fbp_reconstruct(&sorted, &sino, 64).unwrap()).unwrap();
    let bad = similarity_rho(&img, &fbp_reconstruct(&shuffled, &sino, 64).unwrap()).unwrap();
    assert!(good > bad + 0.1, "{good} vs {bad}");
    assert!((circular_kendall(&sorted, &sino.angles) - 1.0).abs() < 1e-12);
    assert!(circular_kendall(&shuffled, &sino.angles) < 0.5);
}

#[test]
fn true_angle_reconstruction_is_close() {
    let img = shepp_logan(64).unwrap();
    let sino = random_sinogram(&img, 256, 64, f64::INFINITY, 2).unwrap();
    let rec = fbp_true_angles(&sino, 64).unwrap();
    assert!(similarity_rho(&img, &rec).unwrap() >= 0.9);
}

#[test]
fn noise_power_matches_target_snr() {
    let img = shepp_logan(64).unwrap();
    let sino = random_sinogram(&img, 200, 64, 3.0, 7).unwrap();
    let clean = sino.clean.as_ref().unwrap();
    let count = (sino.n * sino.r) as f64;
    let noise: f64 = sino
        .rows
        .iter()
        .flatten()
        .zip(clean.iter().flatten())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / count;
    let target = sino.signal_power().unwrap() / 10f64.powf(0.3);
    assert!((noise / target - 1.0).abs() < 0.05, "{noise} vs {target}");
    assert!(sino.angles.iter().all(|&t| (0.0..TAU).contains(&t)));
}

#[test]
fn sinogram_is_seeded_and_round_trips() {
    let img = shepp_logan(32).unwrap();
    let a = random_sinogram(&img, 16, 24, -2.0, 5).unwrap();
    let b = random_sinogram(&img, 16, 24, -2.0, 5).unwrap();
    let c = random_sinogram(&img, 16, 24, -2.0, 6).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.rows, c.rows);
    let mut buf = Vec::new();
    a.write_to(&mut buf).unwrap();
    let back = Sinogram::read_from(&buf[..]).unwrap();
    assert_eq!(back.rows, a.rows);
    assert_eq!(back.angles, a.angles);
    assert_eq!(back.seed, 5);
    assert!(Sinogram::read_from(&buf[..buf.len() - 1]).is_err());
}

#[test]
fn pruned_ordering_accounts_for_every_row() {
    let img = shepp_logan(64).unwrap();
    let sino = random_sinogram(&img, 128, 64, 0.0, 9).unwrap();
    for rule in [None, Some(Rule::Jdr), Some(Rule::Ldr)] {
        let o = prune_and_order(&sino, 10, rule, &RuleConfig::default().with_q(0.8)).unwrap();
        assert_eq!(o.len() + o.discarded, sino.n);
        assert!(o.theta_hat.windows(2).all(|w| w[0] <= w[1]));
        let mut ids = o.order.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), o.len());
    }
}

#[test]
fn pgm_output_has_header_and_payload() {
    let img = shepp_logan(32).unwrap();
    let mut buf = Vec::new();
    img.write_pgm(&mut buf).unwrap();
    let header = b"P5\n32 32\n65535\n";
    assert_eq!(&buf[..header.len()], header);
    assert_eq!(buf.len(), header.len() + 2 * 32 * 32);
}
