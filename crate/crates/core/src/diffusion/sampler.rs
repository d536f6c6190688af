use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DiffusionError, NoiseSchedule};
use crate::rng;

/// Anything that predicts the noise `ε` in `x_t` for a class.
pub trait NoisePredictor {
    fn data_dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    /// `x_t` is `rows × data_dim`; returns a prediction of the same shape.
    fn predict(
        &self,
        x_t: &[f64],
        rows: usize,
        t: usize,
        class: usize,
        schedule: &NoiseSchedule,
    ) -> Result<Vec<f64>, DiffusionError>;
}

/// Closed-form optimal noise predictor for per-class independent Gaussian
/// data `x0 ~ N(μ_c, diag(σ²_c))`:
///
/// `ε*(x, t) = √(1−ᾱ_t) (x − √ᾱ_t μ) / (ᾱ_t σ² + 1 − ᾱ_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianOracle {
    /// Per class: (mean, variance) per dimension.
    classes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl GaussianOracle {
    pub fn new(classes: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self, DiffusionError> {
        let dim = classes
            .first()
            .map(|(m, _)| m.len())
            .ok_or_else(|| DiffusionError::Validation("oracle needs at least one class".into()))?;
        for (m, v) in &classes {
            if m.len() != dim || v.len() != dim || v.iter().any(|&s| !(s > 0.0)) {
                return Err(DiffusionError::Validation(
                    "oracle means/variances must share a dimension and variances be positive".into(),
                ));
            }
        }
        Ok(Self { classes })
    }

    /// Single-class, 1-D `N(mean, variance)`.
    pub fn univariate(mean: f64, variance: f64) -> Result<Self, DiffusionError> {
        Self::new(vec![(vec![mean], vec![variance])])
    }

    /// Posterior mean `E[x0 | x_t]` for one row.
    pub fn posterior_mean(
        &self,
        x_t: &[f64],
        t: usize,
        class: usize,
        schedule: &NoiseSchedule,
    ) -> Result<Vec<f64>, DiffusionError> {
        let ab = schedule.alpha_bar(t)?;
        let (mean, var) = &self.classes[class];
        Ok(x_t
            .iter()
            .zip(mean.iter().zip(var))
            .map(|(x, (m, v))| m + ab.sqrt() * v * (x - ab.sqrt() * m) / (ab * v + 1.0 - ab))
            .collect())
    }
}

impl NoisePredictor for GaussianOracle {
    fn data_dim(&self) -> usize {
        self.classes[0].0.len()
    }

    fn num_classes(&self) -> usize {
        self.classes.len()
    }

    fn predict(
        &self,
        x_t: &[f64],
        rows: usize,
        t: usize,
        class: usize,
        schedule: &NoiseSchedule,
    ) -> Result<Vec<f64>, DiffusionError> {
        let ab = schedule.alpha_bar(t)?;
        let (mean, var) = self
            .classes
            .get(class)
            .ok_or_else(|| DiffusionError::Validation(format!("class {class} out of range")))?;
        let dim = mean.len();
        debug_assert_eq!(x_t.len(), rows * dim);
        Ok(x_t
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let (m, v) = (mean[i % dim], var[i % dim]);
                (1.0 - ab).sqrt() * (x - ab.sqrt() * m) / (ab * v + 1.0 - ab)
            })
            .collect())
    }
}

/// Reverse-step noise variance `σ_t²`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseVariance {
    /// `σ_t² = β_t`.
    #[default]
    Beta,
    /// `σ_t² = β̃_t = β_t (1 − ᾱ_{t−1}) / (1 − ᾱ_t)`.
    Posterior,
}

const SAMPLE_CHUNK: usize = 1024;

/// Ancestral DDPM sampling from `x_T ~ N(0, I)`:
///
/// `x_{t−1} = (x_t − β_t / √(1−ᾱ_t) · ε̂) / √α_t + σ_t z`, with no noise
/// added at `t = 1`.
pub fn reverse_sample(
    predictor: &dyn NoisePredictor,
    schedule: &NoiseSchedule,
    class: usize,
    count: usize,
    seed: u64,
    variance: ReverseVariance,
) -> Result<Vec<Vec<f64>>, DiffusionError> {
    let mut rng = rng::seeded(seed);
    reverse_sample_with(predictor, schedule, class, count, &mut rng, variance)
}

pub(crate) fn reverse_sample_with(
    predictor: &dyn NoisePredictor,
    schedule: &NoiseSchedule,
    class: usize,
    count: usize,
    rng: &mut rng::Rng,
    variance: ReverseVariance,
) -> Result<Vec<Vec<f64>>, DiffusionError> {
    if class >= predictor.num_classes() {
        return Err(DiffusionError::Validation(format!(
            "class {class} out of range for {} classes",
            predictor.num_classes()
        )));
    }
    let dim = predictor.data_dim();
    let mut out = Vec::with_capacity(count);
    let mut remaining = count;
    while remaining > 0 {
        let rows = remaining.min(SAMPLE_CHUNK);
        let mut x: Vec<f64> = (0..rows * dim).map(|_| StandardNormal.sample(rng)).collect();
        for t in (1..=schedule.steps()).rev() {
            let eps = predictor.predict(&x, rows, t, class, schedule)?;
            let beta = schedule.beta(t)?;
            let alpha = schedule.alpha(t)?;
            let ab = schedule.alpha_bar(t)?;
            let coef = beta / (1.0 - ab).sqrt();
            let inv_sqrt_alpha = 1.0 / alpha.sqrt();
            let sigma = if t > 1 {
                match variance {
                    ReverseVariance::Beta => beta.sqrt(),
                    ReverseVariance::Posterior => (beta * (1.0 - schedule.alpha_bar(t - 1)?) / (1.0 - ab)).sqrt(),
                }
            } else {
                0.0
            };
            for (xi, ei) in x.iter_mut().zip(&eps) {
                let mean = (*xi - coef * ei) * inv_sqrt_alpha;
                *xi = if sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + sigma * z
                } else {
                    mean
                };
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(DiffusionError::Numeric(format!("non-finite sample at step {t}")));
            }
        }
        out.extend(x.chunks(dim).map(<[f64]>::to_vec));
        remaining -= rows;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(samples: &[Vec<f64>]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| s[0]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[0] - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn single_step_is_posterior_mean() {
        // One step with ᾱ_1 ≈ 0: the update is exactly E[x0 | x1].
        let s = NoiseSchedule::from_betas(vec![0.9999]).unwrap();
        let oracle = GaussianOracle::univariate(3.0, 0.25).unwrap();
        let mut rng = rng::seeded(5);
        for x1 in [-1.0, 0.0, 0.7] {
            let eps = oracle.predict(&[x1], 1, 1, 0, &s).unwrap()[0];
            let step = (x1 - 0.9999 / (1.0f64 - 0.0001).sqrt() * eps) / 0.0001f64.sqrt();
            let post = oracle.posterior_mean(&[x1], 1, 0, &s).unwrap()[0];
            assert!((step - post).abs() < 1e-9, "{step} vs {post}");
        }
        let samples = reverse_sample_with(&oracle, &s, 0, 10_000, &mut rng, ReverseVariance::Beta).unwrap();
        let (mean, _) = moments(&samples);
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn deterministic() {
        let s = NoiseSchedule::scaled_linear(20).unwrap();
        let oracle = GaussianOracle::univariate(1.0, 0.5).unwrap();
        let a = reverse_sample(&oracle, &s, 0, 50, 3, ReverseVariance::Beta).unwrap();
        let b = reverse_sample(&oracle, &s, 0, 50, 3, ReverseVariance::Beta).unwrap();
        assert_eq!(a, b);
        assert!(reverse_sample(&oracle, &s, 1, 5, 3, ReverseVariance::Beta).is_err());
    }

    #[test]
    fn two_dim_two_class_oracle_preserves_means() {
        let s = NoiseSchedule::scaled_linear(100).unwrap();
        let oracle = GaussianOracle::new(vec![
            (vec![-2.0, 0.0], vec![0.09, 0.09]),
            (vec![2.0, 1.0], vec![0.09, 0.09]),
        ])
        .unwrap();
        let samples = reverse_sample(&oracle, &s, 1, 4000, 8, ReverseVariance::Posterior).unwrap();
        let mx = samples.iter().map(|p| p[0]).sum::<f64>() / 4000.0;
        let my = samples.iter().map(|p| p[1]).sum::<f64>() / 4000.0;
        assert!((mx - 2.0).abs() < 0.05 && (my - 1.0).abs() < 0.05);
    }
}
