use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::sampler::NoisePredictor;
use super::{DiffusionConfig, DiffusionError, NoiseSchedule};
use crate::dataset::{conditioned_input, LabeledSet};
use crate::nn::{adam_step, Activation, AdamState, DenseNet, Loss, MeanSquaredError, Tensor};
use crate::rng;

/// Sinusoidal features of the step index: `features / 2` sines followed by
/// as many cosines, frequencies `10000^{-i / (features/2)}`.
pub fn time_embedding(t: usize, features: usize) -> Vec<f64> {
    let half = features / 2;
    let freq = |i: usize| (-(10_000f64).ln() * i as f64 / half as f64).exp();
    let t = t as f64;
    let mut out: Vec<f64> = (0..half).map(|i| (t * freq(i)).sin()).collect();
    out.extend((0..half).map(|i| (t * freq(i)).cos()));
    out.resize(features, 0.0);
    out
}

/// Dense noise-prediction network `(x_t ‖ emb(t) ‖ one_hot) → ε̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denoiser {
    pub net: DenseNet,
    data_dim: usize,
    num_classes: usize,
    time_features: usize,
}

impl Denoiser {
    pub fn new(config: &DiffusionConfig) -> Result<Self, DiffusionError> {
        config.validate()?;
        let net = DenseNet::five_stage(
            config.data_dim + config.time_features + config.num_classes,
            config.hidden,
            config.data_dim,
            config.leaky_slope,
            Activation::Identity,
            config.seed ^ 0xD1FF,
        );
        Self::from_net(net, config.data_dim, config.num_classes, config.time_features)
    }

    pub fn from_net(
        net: DenseNet,
        data_dim: usize,
        num_classes: usize,
        time_features: usize,
    ) -> Result<Self, DiffusionError> {
        if net.input_dim() != data_dim + time_features + num_classes || net.output_dim() != data_dim {
            return Err(DiffusionError::Validation(format!(
                "denoiser net maps {} -> {}, expected {} -> {data_dim}",
                net.input_dim(),
                net.output_dim(),
                data_dim + time_features + num_classes
            )));
        }
        Ok(Self {
            net,
            data_dim,
            num_classes,
            time_features,
        })
    }

    fn input(&self, x_t: &[f64], steps: &[usize], labels: &[usize]) -> Tensor {
        let emb: Vec<f64> = steps
            .iter()
            .flat_map(|&t| time_embedding(t, self.time_features))
            .collect();
        conditioned_input(
            x_t,
            self.data_dim,
            Some((&emb, self.time_features)),
            labels,
            self.num_classes,
        )
    }
}

impl NoisePredictor for Denoiser {
    fn data_dim(&self) -> usize {
        self.data_dim
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict(
        &self,
        x_t: &[f64],
        rows: usize,
        t: usize,
        class: usize,
        _schedule: &NoiseSchedule,
    ) -> Result<Vec<f64>, DiffusionError> {
        if class >= self.num_classes {
            return Err(DiffusionError::Validation(format!("class {class} out of range")));
        }
        let input = self.input(x_t, &vec![t; rows], &vec![class; rows]);
        Ok(self.net.infer(&input)?.into_values())
    }
}

/// Train a fresh [`Denoiser`] to predict `ε` from `x_t` under uniformly
/// drawn `t`, minimising mean squared error. Returns the per-step loss.
pub fn train_denoiser(
    data: &LabeledSet,
    schedule: &NoiseSchedule,
    config: &DiffusionConfig,
) -> Result<(Denoiser, Vec<f64>), DiffusionError> {
    let mut denoiser = Denoiser::new(config)?;
    if config.epochs == 0 {
        return Ok((denoiser, Vec::new()));
    }
    if data.is_empty() {
        return Err(DiffusionError::Validation("training set is empty".into()));
    }
    if data.dim() != config.data_dim {
        return Err(DiffusionError::Validation(format!(
            "data dim {} does not match config dim {}",
            data.dim(),
            config.data_dim
        )));
    }
    if let Some(&bad) = data.labels().iter().find(|&&l| l >= config.num_classes) {
        return Err(DiffusionError::Validation(format!("label {bad} out of range")));
    }
    let mut adam = AdamState::new(denoiser.net.param_count(), config.learning_rate);
    let mut shuffle_rng = rng::stream(config.seed, 20);
    let mut noise_rng = rng::stream(config.seed, 21);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::new();
    let dim = config.data_dim;

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            let (x0, labels) = data.gather(chunk);
            let steps: Vec<usize> = chunk
                .iter()
                .map(|_| noise_rng.random_range(1..=schedule.steps()))
                .collect();
            let eps: Vec<f64> = (0..x0.len()).map(|_| StandardNormal.sample(&mut noise_rng)).collect();
            let mut x_t = Vec::with_capacity(x0.len());
            for (r, &t) in steps.iter().enumerate() {
                let ab = schedule.alpha_bar(t)?;
                let (keep, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
                for i in r * dim..(r + 1) * dim {
                    x_t.push(keep * x0[i] + noise * eps[i]);
                }
            }
            let input = denoiser.input(&x_t, &steps, &labels);
            let pred = denoiser.net.forward(&input)?;
            let target = Tensor::new(pred.shape().to_vec(), eps)?;
            let (loss, grad) = MeanSquaredError { target }.value_and_grad(&pred)?;
            if !loss.is_finite() {
                return Err(DiffusionError::Numeric(format!(
                    "non-finite loss at step {}",
                    history.len()
                )));
            }
            denoiser.net.backward(&grad)?;
            let mut params = denoiser.net.params();
            adam_step(&mut params, &denoiser.net.grads(), &mut adam)?;
            denoiser.net.set_params(&params)?;
            history.push(loss);
        }
    }
    Ok((denoiser, history))
}
