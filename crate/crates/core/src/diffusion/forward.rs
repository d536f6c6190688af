use rand_distr::{Distribution, StandardNormal};

use super::{DiffusionError, NoiseSchedule};
use crate::rng;

/// `x_t = √ᾱ_t · x0 + √(1 − ᾱ_t) · ε` with `ε ~ N(0, I)`; returns `(x_t, ε)`.
/// `t = 0` returns `x0` unchanged.
pub fn forward_noise(
    x0: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), DiffusionError> {
    forward_noise_with(x0, t, schedule, &mut rng::seeded(seed))
}

pub fn forward_noise_with(
    x0: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut rng::Rng,
) -> Result<(Vec<f64>, Vec<f64>), DiffusionError> {
    let alpha_bar = schedule.alpha_bar(t)?;
    let eps: Vec<f64> = x0.iter().map(|_| StandardNormal.sample(rng)).collect();
    let (keep, noise) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    let xt = x0.iter().zip(&eps).map(|(x, e)| keep * x + noise * e).collect();
    Ok((xt, eps))
}
