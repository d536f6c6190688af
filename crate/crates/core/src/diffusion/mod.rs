//! Class-conditioned denoising diffusion: forward noising, a dense noise
//! predictor, ancestral reverse sampling, and a closed-form Gaussian
//! predictor that the sampler can run against for verification.

mod denoiser;
mod forward;
mod sampler;
mod schedule;

pub use denoiser::{time_embedding, train_denoiser, Denoiser};
pub use forward::{forward_noise, forward_noise_with};
pub use sampler::{reverse_sample, GaussianOracle, NoisePredictor, ReverseVariance};
pub use schedule::{NoiseSchedule, BETA_END, BETA_START};

use serde::{Deserialize, Serialize};

use crate::catalog::{CatalogError, CellClass, ImageRecord, Pixels, Provenance, IMAGE_LEN, NUM_CLASSES};
use crate::nn::NnError;
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum DiffusionError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

impl From<CatalogError> for DiffusionError {
    fn from(e: CatalogError) -> Self {
        DiffusionError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffusionConfig {
    pub data_dim: usize,
    pub num_classes: usize,
    pub hidden: [usize; 4],
    pub time_features: usize,
    pub steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub leaky_slope: f64,
    pub reverse_variance: ReverseVariance,
    pub seed: u64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self::image()
    }
}

impl DiffusionConfig {
    pub fn image() -> Self {
        Self {
            data_dim: IMAGE_LEN,
            num_classes: NUM_CLASSES,
            hidden: [128, 256, 256, 128],
            time_features: 16,
            steps: 100,
            epochs: 75,
            batch_size: 64,
            learning_rate: 2e-4,
            leaky_slope: 0.2,
            reverse_variance: ReverseVariance::Beta,
            seed: 0,
        }
    }

    pub fn toy(data_dim: usize, num_classes: usize) -> Self {
        Self {
            data_dim,
            num_classes,
            hidden: [32, 32, 32, 32],
            ..Self::image()
        }
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        if [
            self.data_dim,
            self.num_classes,
            self.time_features,
            self.steps,
            self.batch_size,
        ]
        .contains(&0)
            || self.hidden.contains(&0)
        {
            return Err(DiffusionError::Validation(
                "dimensions, steps and batch size must be positive".into(),
            ));
        }
        if self.time_features % 2 != 0 {
            return Err(DiffusionError::Validation("time_features must be even".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.leaky_slope >= 0.0) {
            return Err(DiffusionError::Validation("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> Result<NoiseSchedule, DiffusionError> {
        NoiseSchedule::scaled_linear(self.steps)
    }
}

/// `per_class` reverse-sampled images per class, provenance `dm`.
pub fn synthesize_corpus(
    denoiser: &Denoiser,
    schedule: &NoiseSchedule,
    per_class: usize,
    seed: u64,
    variance: ReverseVariance,
) -> Result<Vec<ImageRecord>, DiffusionError> {
    if denoiser.data_dim() != IMAGE_LEN {
        return Err(DiffusionError::Validation(format!(
            "denoiser produces {}-dim samples; catalog images are {IMAGE_LEN}",
            denoiser.data_dim()
        )));
    }
    let mut rng = rng::seeded(seed);
    let mut records = Vec::with_capacity(per_class * denoiser.num_classes());
    for class_idx in 0..denoiser.num_classes() {
        let class = CellClass::from_index(class_idx)
            .ok_or_else(|| DiffusionError::Validation(format!("no cell class for index {class_idx}")))?;
        let samples = sampler::reverse_sample_with(denoiser, schedule, class_idx, per_class, &mut rng, variance)?;
        for (i, sample) in samples.into_iter().enumerate() {
            records.push(ImageRecord::new(
                format!("dm-{seed}-{}-{i:05}", class.name()),
                Pixels::from_unit_range(&sample)?,
                Provenance::Dm,
                Some(class),
            )?);
        }
    }
    Ok(records)
}

pub const DM_FORMAT: &str = "cellprobe-dm";

/// Schedule header followed by the denoiser weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionCheckpoint {
    pub format: String,
    pub version: u32,
    pub schedule: NoiseSchedule,
    pub config: DiffusionConfig,
    pub denoiser: Denoiser,
}

impl DiffusionCheckpoint {
    pub fn new(config: DiffusionConfig, schedule: NoiseSchedule, denoiser: Denoiser) -> Self {
        Self {
            format: DM_FORMAT.into(),
            version: 1,
            schedule,
            config,
            denoiser,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, DiffusionError> {
        let ckpt: Self = serde_json::from_str(text).map_err(|e| DiffusionError::Validation(e.to_string()))?;
        if ckpt.format != DM_FORMAT || ckpt.version != 1 {
            return Err(DiffusionError::Validation(format!(
                "not a {DM_FORMAT} v1 checkpoint (got {} v{})",
                ckpt.format, ckpt.version
            )));
        }
        Denoiser::from_net(
            ckpt.denoiser.net.clone(),
            ckpt.denoiser.data_dim(),
            ckpt.denoiser.num_classes(),
            ckpt.config.time_features,
        )?;
        Ok(ckpt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::hash_map::DefaultHasher;
    use std::hash::{Hash, Hasher};

    fn tiny_image_denoiser() -> (Denoiser, NoiseSchedule) {
        let cfg = DiffusionConfig {
            hidden: [4, 4, 4, 4],
            steps: 5,
            ..DiffusionConfig::image()
        };
        (Denoiser::new(&cfg).unwrap(), cfg.schedule().unwrap())
    }

    fn corpus_hash(records: &[ImageRecord]) -> u64 {
        let mut h = DefaultHasher::new();
        for r in records {
            r.pixels.hash(&mut h);
        }
        h.finish()
    }

    #[test]
    fn corpus_counts_and_labels() {
        let (d, s) = tiny_image_denoiser();
        assert!(synthesize_corpus(&d, &s, 0, 1, ReverseVariance::Beta)
            .unwrap()
            .is_empty());
        let c = synthesize_corpus(&d, &s, 10, 1, ReverseVariance::Beta).unwrap();
        assert_eq!(c.len(), 70);
        assert!(c
            .iter()
            .all(|r| r.class_label.is_some() && r.provenance == Provenance::Dm));
    }

    #[test]
    fn different_seeds_differ() {
        let (d, s) = tiny_image_denoiser();
        let a = synthesize_corpus(&d, &s, 2, 1, ReverseVariance::Beta).unwrap();
        let b = synthesize_corpus(&d, &s, 2, 2, ReverseVariance::Beta).unwrap();
        assert_ne!(corpus_hash(&a), corpus_hash(&b));
        let a2 = synthesize_corpus(&d, &s, 2, 1, ReverseVariance::Beta).unwrap();
        assert_eq!(corpus_hash(&a), corpus_hash(&a2));
    }

    #[test]
    fn corpus_rejects_toy_dim() {
        let cfg = DiffusionConfig::toy(2, 2);
        let d = Denoiser::new(&cfg).unwrap();
        assert!(synthesize_corpus(&d, &cfg.schedule().unwrap(), 1, 0, ReverseVariance::Beta).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let cfg = DiffusionConfig::toy(1, 1);
        let ckpt = DiffusionCheckpoint::new(cfg.clone(), cfg.schedule().unwrap(), Denoiser::new(&cfg).unwrap());
        let text = ckpt.to_json();
        assert!(text.contains("\"schedule\":{\"steps\":100,"));
        assert_eq!(DiffusionCheckpoint::from_json(&text).unwrap(), ckpt);
    }
}
