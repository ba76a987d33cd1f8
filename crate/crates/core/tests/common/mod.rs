//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use lia2c_core::latent::{EdSample, EncoderInput};
use lia2c_core::population::{Configuration, DirichletParams};
use rand::Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOLERANCE: f64 = 1e-4;

/// Relative error with an absolute floor so that near-zero gradients compare
/// on an absolute scale.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error between `analytic` and the central difference of
/// `f` at `params`, over the coordinates in `coords`.
pub fn fd_max_error(
    params: &[f64],
    analytic: &[f64],
    coords: impl IntoIterator<Item = usize>,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in coords {
        let orig = p[i];
        p[i] = orig + FD_STEP;
        let up = f(&p);
        p[i] = orig - FD_STEP;
        let down = f(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    worst
}

/// Up to `max` distinct coordinates out of `len`, all of them when `len <= max`.
pub fn coordinate_sample<R: Rng>(len: usize, max: usize, rng: &mut R) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    rand::seq::index::sample(rng, len, max).into_vec()
}

pub fn random_simplex<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn random_configuration<R: Rng>(total: usize, k: usize, rng: &mut R) -> Configuration {
    let mut counts = vec![0; k];
    for _ in 0..total {
        counts[rng.random_range(0..k)] += 1;
    }
    Configuration::new(counts)
}

pub fn random_dirichlet<R: Rng>(k: usize, rng: &mut R) -> DirichletParams {
    DirichletParams::new((0..k).map(|_| rng.random_range(0.5..6.0)).collect()).unwrap()
}

/// Encoder-decoder tuple with random contents over `others` agents.
pub fn random_ed_sample<R: Rng>(obs_count: usize, k: usize, others: usize, rng: &mut R) -> EdSample {
    let observed = random_configuration(others, k, rng);
    EdSample {
        input: EncoderInput {
            public_obs: rng.random_range(0..obs_count),
            private_obs: observed.fractions(),
            self_action: rng.random_range(0..k),
            theta: random_simplex(k, rng),
        },
        next_obs: rng.random_range(0..obs_count),
        rectified: random_configuration(others, k, rng),
        prior: random_dirichlet(k, rng),
    }
}
