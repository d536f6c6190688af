//! Conditional GAN: generator `(noise ‖ one_hot) → data` and discriminator
//! `(data ‖ one_hot) → logit`, trained with alternating Adam updates.
//!
//! The discriminator minimises class-weighted BCE on real (target 1) and
//! generated (target 0) rows. The generator uses the non-saturating
//! objective: BCE with target 1 on its own samples.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::catalog::{class_weights, CatalogError, CellClass, ImageRecord, Pixels, Provenance, IMAGE_LEN};
use crate::dataset::{conditioned_input, LabeledSet};
use crate::nn::{adam_step, bce_with_logits_grad, Activation, AdamState, DenseNet, NnError, Tensor};
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum GanError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numeric failure at step {step}: {message} (last stable step: {last_stable_step:?})")]
    Numeric {
        step: usize,
        /// Parameters were restored to the state after this step; `None`
        /// means the initial parameters.
        last_stable_step: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl From<CatalogError> for GanError {
    fn from(e: CatalogError) -> Self {
        GanError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// Bounded outputs in `[-1, 1]`, mapped to pixels.
    Tanh,
    /// Unbounded outputs (toy tasks).
    Identity,
}

impl OutputActivation {
    fn activation(self) -> Activation {
        match self {
            OutputActivation::Tanh => Activation::Tanh,
            OutputActivation::Identity => Activation::Identity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub num_classes: usize,
    pub data_dim: usize,
    pub hidden: [usize; 4],
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub leaky_slope: f64,
    pub logit_clamp: f64,
    pub output: OutputActivation,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self::image()
    }
}

impl GanConfig {
    /// 64×64×3 images over the seven cell classes.
    pub fn image() -> Self {
        Self {
            noise_dim: 32,
            num_classes: crate::catalog::NUM_CLASSES,
            data_dim: IMAGE_LEN,
            hidden: [128, 256, 256, 128],
            epochs: 200,
            batch_size: 64,
            learning_rate: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            leaky_slope: 0.2,
            logit_clamp: 30.0,
            output: OutputActivation::Tanh,
            seed: 0,
        }
    }

    /// 2-D points, two classes, unbounded output.
    pub fn toy() -> Self {
        Self {
            noise_dim: 4,
            num_classes: 2,
            data_dim: 2,
            hidden: [32, 32, 32, 32],
            epochs: 63,
            learning_rate: 1e-3,
            beta1: 0.5,
            output: OutputActivation::Identity,
            ..Self::image()
        }
    }

    pub fn validate(&self) -> Result<(), GanError> {
        let dims = [self.noise_dim, self.num_classes, self.data_dim, self.batch_size];
        if dims.contains(&0) || self.hidden.contains(&0) {
            return Err(GanError::Validation(
                "dimensions and batch size must be positive".into(),
            ));
        }
        if self.batch_size < 2 {
            return Err(GanError::Validation("batch size must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.leaky_slope >= 0.0) || !(self.logit_clamp > 0.0) {
            return Err(GanError::Validation(
                "learning rate and logit clamp must be positive, leaky slope non-negative".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(GanError::Validation("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: DenseNet,
    pub discriminator: DenseNet,
    noise_dim: usize,
    num_classes: usize,
}

impl GanModel {
    /// Fresh five-stage networks seeded from `config.seed`.
    pub fn new(config: &GanConfig) -> Result<Self, GanError> {
        config.validate()?;
        let generator = DenseNet::five_stage(
            config.noise_dim + config.num_classes,
            config.hidden,
            config.data_dim,
            config.leaky_slope,
            config.output.activation(),
            mix(config.seed, 1),
        );
        let discriminator = DenseNet::five_stage(
            config.data_dim + config.num_classes,
            config.hidden,
            1,
            config.leaky_slope,
            Activation::Identity,
            mix(config.seed, 2),
        );
        Self::from_nets(generator, discriminator, config.noise_dim, config.num_classes)
    }

    pub fn from_nets(
        generator: DenseNet,
        discriminator: DenseNet,
        noise_dim: usize,
        num_classes: usize,
    ) -> Result<Self, GanError> {
        if generator.input_dim() != noise_dim + num_classes {
            return Err(GanError::Validation(format!(
                "generator takes {} inputs, expected noise {noise_dim} + classes {num_classes}",
                generator.input_dim()
            )));
        }
        if discriminator.output_dim() != 1 {
            return Err(GanError::Validation("discriminator must output one logit".into()));
        }
        if discriminator.input_dim() != generator.output_dim() + num_classes {
            return Err(GanError::Validation(format!(
                "discriminator takes {} inputs, expected data {} + classes {num_classes}",
                discriminator.input_dim(),
                generator.output_dim()
            )));
        }
        Ok(Self {
            generator,
            discriminator,
            noise_dim,
            num_classes,
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn data_dim(&self) -> usize {
        self.generator.output_dim()
    }

    fn params_finite(&self) -> bool {
        self.generator.params_finite() && self.discriminator.params_finite()
    }
}

fn mix(seed: u64, salt: u64) -> u64 {
    seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanOptimizers {
    pub generator: AdamState,
    pub discriminator: AdamState,
}

impl GanOptimizers {
    pub fn new(model: &GanModel, config: &GanConfig) -> Self {
        let adam = |n| AdamState::new(n, config.learning_rate).with_betas(config.beta1, config.beta2);
        Self {
            generator: adam(model.generator.param_count()),
            discriminator: adam(model.discriminator.param_count()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLoss {
    pub discriminator: f64,
    pub generator: f64,
}

/// Clamp logits to `±limit`; gradient is zero where clamped.
fn clamped_bce(logits: &Tensor, targets: &Tensor, weights: &Tensor, limit: f64) -> Result<(f64, Tensor), NnError> {
    let clamped = Tensor::new(
        logits.shape().to_vec(),
        logits.values().iter().map(|z| z.clamp(-limit, limit)).collect(),
    )?;
    let (loss, mut grad) = bce_with_logits_grad(&clamped, targets, weights)?;
    for (g, z) in grad.values_mut().iter_mut().zip(logits.values()) {
        if z.abs() > limit {
            *g = 0.0;
        }
    }
    Ok((loss, grad))
}

fn update(net: &mut DenseNet, state: &mut AdamState) -> Result<(), NnError> {
    let mut params = net.params();
    adam_step(&mut params, &net.grads(), state)?;
    net.set_params(&params)
}

/// One discriminator update then one generator update on `batch`
/// (`data` is `labels.len()` rows of the model's data dim), using explicit
/// generator noise (`labels.len() × noise_dim`).
pub fn train_step_with_noise(
    model: &mut GanModel,
    data: &[f64],
    labels: &[usize],
    noise: &[f64],
    class_weights: &[f64],
    config: &GanConfig,
    optimizers: &mut GanOptimizers,
) -> Result<StepLoss, GanError> {
    let rows = labels.len();
    let dim = model.data_dim();
    let k = model.num_classes;
    if rows < 2 {
        return Err(GanError::Validation("batch size must be at least 2".into()));
    }
    if data.len() != rows * dim || noise.len() != rows * model.noise_dim {
        return Err(GanError::Validation("batch or noise has the wrong size".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(GanError::Validation(format!(
            "label {bad} out of range for {k} classes"
        )));
    }
    if class_weights.len() != k {
        return Err(GanError::Validation(format!("need {k} class weights")));
    }

    let g_in = conditioned_input(noise, model.noise_dim, None, labels, k);
    let fake = model.generator.forward(&g_in)?;

    // Discriminator: real rows then fake rows.
    let mut both = data.to_vec();
    both.extend_from_slice(fake.values());
    let both_labels: Vec<usize> = labels.iter().chain(labels).copied().collect();
    let d_in = conditioned_input(&both, dim, None, &both_labels, k);
    let logits = model.discriminator.forward(&d_in)?;
    let targets = Tensor::vector((0..2 * rows).map(|i| if i < rows { 1.0 } else { 0.0 }).collect());
    let weights = Tensor::vector(both_labels.iter().map(|&l| class_weights[l]).collect());
    let (d_loss, d_grad) = clamped_bce(&logits, &targets, &weights, config.logit_clamp)?;
    model.discriminator.backward(&d_grad)?;
    update(&mut model.discriminator, &mut optimizers.discriminator)?;

    // Generator: push the updated discriminator towards "real" on fakes.
    let d_in = conditioned_input(fake.values(), dim, None, labels, k);
    let logits = model.discriminator.forward(&d_in)?;
    let targets = Tensor::vector(vec![1.0; rows]);
    let weights = Tensor::vector(labels.iter().map(|&l| class_weights[l]).collect());
    let (g_loss, g_grad) = clamped_bce(&logits, &targets, &weights, config.logit_clamp)?;
    let d_input_grad = model.discriminator.backward(&g_grad)?;
    let width = dim + k;
    let fake_grad: Vec<f64> = d_input_grad
        .values()
        .chunks(width)
        .flat_map(|row| row[..dim].iter().copied())
        .collect();
    model.generator.backward(&Tensor::matrix(rows, dim, fake_grad)?)?;
    update(&mut model.generator, &mut optimizers.generator)?;

    Ok(StepLoss {
        discriminator: d_loss,
        generator: g_loss,
    })
}

fn sample_noise(rng: &mut rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// [`train_step_with_noise`] with `N(0, I)` noise drawn from `rng`.
pub fn train_step(
    model: &mut GanModel,
    data: &[f64],
    labels: &[usize],
    class_weights: &[f64],
    config: &GanConfig,
    optimizers: &mut GanOptimizers,
    rng: &mut rng::Rng,
) -> Result<StepLoss, GanError> {
    let noise = sample_noise(rng, labels.len() * model.noise_dim);
    train_step_with_noise(model, data, labels, &noise, class_weights, config, optimizers)
}

pub fn steps_per_epoch(len: usize, batch_size: usize) -> usize {
    len.div_ceil(batch_size)
}

/// Minibatch training for `config.epochs` epochs of `⌈N / batch⌉` steps.
/// A trailing batch of one row is padded with a random second row.
///
/// On a non-finite loss or parameter the model is rolled back to the last
/// stable step and [`GanError::Numeric`] is returned.
pub fn train(model: &mut GanModel, data: &LabeledSet, config: &GanConfig) -> Result<Vec<StepLoss>, GanError> {
    config.validate()?;
    if config.epochs == 0 {
        return Ok(Vec::new());
    }
    if data.is_empty() {
        return Err(GanError::Validation("training set is empty".into()));
    }
    if data.len() < 2 {
        return Err(GanError::Validation("training set needs at least two rows".into()));
    }
    if data.dim() != model.data_dim() {
        return Err(GanError::Validation(format!(
            "data dim {} does not match model dim {}",
            data.dim(),
            model.data_dim()
        )));
    }
    if let Some(&bad) = data.labels().iter().find(|&&l| l >= model.num_classes) {
        return Err(GanError::Validation(format!("label {bad} out of range")));
    }
    let weights = class_weights(&data.class_counts(model.num_classes))?;
    let mut optimizers = GanOptimizers::new(model, config);
    let mut shuffle_rng = rng::stream(config.seed, 10);
    let mut noise_rng = rng::stream(config.seed, 11);
    let mut history = Vec::with_capacity(config.epochs * steps_per_epoch(data.len(), config.batch_size));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut stable = (model.clone(), optimizers.clone());

    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch_size) {
            let mut idx = chunk.to_vec();
            if idx.len() == 1 {
                let other = order.iter().copied().find(|&i| i != idx[0]).expect("len >= 2");
                idx.push(other);
            }
            let (batch, labels) = data.gather(&idx);
            let step = history.len();
            let result = train_step(
                model,
                &batch,
                &labels,
                &weights,
                config,
                &mut optimizers,
                &mut noise_rng,
            );
            let failure = match result {
                Ok(loss) if loss.discriminator.is_finite() && loss.generator.is_finite() && model.params_finite() => {
                    history.push(loss);
                    None
                }
                Ok(_) => Some("non-finite loss or parameters".to_string()),
                Err(GanError::Nn(NnError::Numeric(msg))) => Some(msg),
                Err(e) => return Err(e),
            };
            if let Some(message) = failure {
                *model = stable.0;
                return Err(GanError::Numeric {
                    step,
                    last_stable_step: step.checked_sub(1),
                    message,
                });
            }
            stable = (model.clone(), optimizers.clone());
        }
    }
    Ok(history)
}

/// `count` samples of class `class`, each `generator(z ‖ one_hot)` with
/// `z ~ N(0, I)`.
pub fn generate(model: &GanModel, class: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, GanError> {
    let mut rng = rng::seeded(seed);
    generate_with(model, class, count, &mut rng)
}

fn generate_with(model: &GanModel, class: usize, count: usize, rng: &mut rng::Rng) -> Result<Vec<Vec<f64>>, GanError> {
    if class >= model.num_classes {
        return Err(GanError::Validation(format!(
            "class index {class} out of range for {} classes",
            model.num_classes
        )));
    }
    let mut out = Vec::with_capacity(count);
    let dim = model.data_dim();
    const CHUNK: usize = 256;
    let mut remaining = count;
    while remaining > 0 {
        let rows = remaining.min(CHUNK);
        let noise = sample_noise(rng, rows * model.noise_dim);
        let labels = vec![class; rows];
        let input = conditioned_input(&noise, model.noise_dim, None, &labels, model.num_classes);
        let values = model.generator.infer(&input)?.into_values();
        out.extend(values.chunks(dim).map(<[f64]>::to_vec));
        remaining -= rows;
    }
    Ok(out)
}

/// `per_class` image records per class with provenance `cgan`. The model
/// must produce full 64×64×3 images over at most the seven cell classes.
pub fn synthesize_corpus(model: &GanModel, per_class: usize, seed: u64) -> Result<Vec<ImageRecord>, GanError> {
    if model.data_dim() != IMAGE_LEN {
        return Err(GanError::Validation(format!(
            "model produces {}-dim samples; catalog images are {IMAGE_LEN}",
            model.data_dim()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut records = Vec::with_capacity(per_class * model.num_classes);
    for class_idx in 0..model.num_classes {
        let class = CellClass::from_index(class_idx)
            .ok_or_else(|| GanError::Validation(format!("no cell class for index {class_idx}")))?;
        for (i, sample) in generate_with(model, class_idx, per_class, &mut rng)?
            .into_iter()
            .enumerate()
        {
            records.push(ImageRecord::new(
                format!("cgan-{seed}-{}-{i:05}", class.name()),
                Pixels::from_unit_range(&sample)?,
                Provenance::Cgan,
                Some(class),
            )?);
        }
    }
    Ok(records)
}

pub const GAN_FORMAT: &str = "cellprobe-gan";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanCheckpoint {
    pub format: String,
    pub version: u32,
    pub config: GanConfig,
    pub model: GanModel,
}

impl GanCheckpoint {
    pub fn new(config: GanConfig, model: GanModel) -> Self {
        Self {
            format: GAN_FORMAT.into(),
            version: 1,
            config,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, GanError> {
        let ckpt: Self = serde_json::from_str(text).map_err(|e| GanError::Validation(e.to_string()))?;
        if ckpt.format != GAN_FORMAT || ckpt.version != 1 {
            return Err(GanError::Validation(format!(
                "not a {GAN_FORMAT} v1 checkpoint (got {} v{})",
                ckpt.format, ckpt.version
            )));
        }
        // re-run the dimension checks
        GanModel::from_nets(
            ckpt.model.generator.clone(),
            ckpt.model.discriminator.clone(),
            ckpt.model.noise_dim,
            ckpt.model.num_classes,
        )?;
        Ok(ckpt)
    }
}
