//! Phantom catalogs, generator training and corpus synthesis.

use std::path::Path;

use cellprobe::catalog::{load_catalog, render_phantom, save_catalog, IMAGE_LEN, NUM_CLASSES};
use cellprobe::dataset::LabeledSet;
use cellprobe::diffusion::{self, train_denoiser, DiffusionCheckpoint, DiffusionConfig, DM_FORMAT};
use cellprobe::gan::{self, GanCheckpoint, GanConfig, GanError, GanModel, GAN_FORMAT};
use cellprobe::CellClass;

use crate::{read_text, read_toml, write_file, CliError, Outcome, TrainArgs};

/// Phantom seeds for one invocation are `seed · 2²⁰ + i`, so different
/// seeds never collide on ids.
const PER_SEED: u64 = 1 << 20;

pub fn phantoms(per_class: usize, seed: u64, out: &Path) -> Result<Outcome, CliError> {
    if per_class == 0 || per_class as u64 > PER_SEED {
        return Err(CliError::Validation(format!("--per-class must lie in 1..={PER_SEED}")));
    }
    let base = seed
        .checked_mul(PER_SEED)
        .ok_or_else(|| CliError::Validation(format!("--seed {seed} is too large")))?;
    let records: Vec<_> = CellClass::ALL
        .iter()
        .flat_map(|&class| (0..per_class as u64).map(move |i| render_phantom(class, base + i)))
        .collect();
    let entries = save_catalog(out, &records).map_err(|e| CliError::output(out, e))?;
    Ok(Outcome::new(format!(
        "wrote {} phantoms ({per_class} per class) to {}",
        entries.len(),
        out.display()
    ))
    .with(out.join(cellprobe::catalog::MANIFEST_FILE)))
}

fn dataset(dir: &Path) -> Result<LabeledSet, CliError> {
    let records = load_catalog(dir).map_err(|e| CliError::input(dir, e))?;
    if records.is_empty() {
        return Err(CliError::input(dir, "catalog is empty"));
    }
    LabeledSet::from_records(&records, &CellClass::ALL).map_err(|e| CliError::input(dir, e))
}

fn check_image_dims(data_dim: usize, num_classes: usize, config: Option<&Path>) -> Result<(), CliError> {
    if data_dim != IMAGE_LEN || num_classes != NUM_CLASSES {
        let msg = format!(
            "catalog training needs data_dim = {IMAGE_LEN} and num_classes = {NUM_CLASSES}, \
             got {data_dim} and {num_classes}"
        );
        return Err(match config {
            Some(p) => CliError::input(p, msg),
            None => CliError::Validation(msg),
        });
    }
    Ok(())
}

pub fn train_gan(args: &TrainArgs) -> Result<Outcome, CliError> {
    let mut config = match &args.config {
        Some(p) => read_toml::<GanConfig>(p)?,
        None => GanConfig::image(),
    };
    config.epochs = args.epochs.unwrap_or(config.epochs);
    config.seed = args.seed.unwrap_or(config.seed);
    config.validate().map_err(|e| with_config(e.into(), args))?;
    check_image_dims(config.data_dim, config.num_classes, args.config.as_deref())?;
    let data = dataset(&args.dataset)?;

    let mut model = GanModel::new(&config)?;
    match gan::train(&mut model, &data, &config) {
        Ok(history) => {
            write_file(&args.out, GanCheckpoint::new(config.clone(), model).to_json())?;
            let last = history.last().map_or(String::new(), |l| {
                format!("; final losses D {:.4} G {:.4}", l.discriminator, l.generator)
            });
            Ok(Outcome::new(format!(
                "trained cGAN for {} epoch(s), {} step(s){last}; checkpoint {}",
                config.epochs,
                history.len(),
                args.out.display()
            ))
            .with(&args.out))
        }
        Err(e @ GanError::Numeric { .. }) => {
            // `train` restored the last stable parameters; keep them.
            let stable = args.out.with_extension("stable.json");
            write_file(&stable, GanCheckpoint::new(config, model).to_json())?;
            Err(CliError::Runtime(format!(
                "{e}; last stable checkpoint written to {}",
                stable.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn train_dm(args: &TrainArgs) -> Result<Outcome, CliError> {
    let mut config = match &args.config {
        Some(p) => read_toml::<DiffusionConfig>(p)?,
        None => DiffusionConfig::image(),
    };
    config.epochs = args.epochs.unwrap_or(config.epochs);
    config.seed = args.seed.unwrap_or(config.seed);
    config.validate().map_err(|e| with_config(e.into(), args))?;
    check_image_dims(config.data_dim, config.num_classes, args.config.as_deref())?;
    let data = dataset(&args.dataset)?;

    let schedule = config.schedule()?;
    let (denoiser, history) = train_denoiser(&data, &schedule, &config).map_err(|e| match CliError::from(e) {
        CliError::Runtime(m) => CliError::Runtime(format!("{m}; no checkpoint written to {}", args.out.display())),
        other => other,
    })?;
    let steps = history.len();
    let last = history.last().map_or(String::new(), |l| format!("; final loss {l:.5}"));
    write_file(
        &args.out,
        DiffusionCheckpoint::new(config.clone(), schedule, denoiser).to_json(),
    )?;
    Ok(Outcome::new(format!(
        "trained diffusion model for {} epoch(s), {steps} step(s){last}; checkpoint {}",
        config.epochs,
        args.out.display()
    ))
    .with(&args.out))
}

fn with_config(e: CliError, args: &TrainArgs) -> CliError {
    match &args.config {
        Some(p) => e.at(p),
        None => e,
    }
}

#[derive(serde::Deserialize)]
struct FormatHeader {
    format: String,
}

pub fn synthesize(model: &Path, per_class: usize, seed: u64, out: &Path) -> Result<Outcome, CliError> {
    if per_class == 0 {
        return Err(CliError::Validation("--per-class must be positive".into()));
    }
    let text = read_text(model)?;
    let header: FormatHeader = serde_json::from_str(&text).map_err(|e| CliError::input(model, e))?;
    let records = match header.format.as_str() {
        GAN_FORMAT => {
            let ckpt = GanCheckpoint::from_json(&text).map_err(|e| CliError::from(e).at(model))?;
            gan::synthesize_corpus(&ckpt.model, per_class, seed)?
        }
        DM_FORMAT => {
            let ckpt = DiffusionCheckpoint::from_json(&text).map_err(|e| CliError::from(e).at(model))?;
            diffusion::synthesize_corpus(
                &ckpt.denoiser,
                &ckpt.schedule,
                per_class,
                seed,
                ckpt.config.reverse_variance,
            )?
        }
        other => return Err(CliError::input(model, format!("unknown checkpoint format {other:?}"))),
    };
    let entries = save_catalog(out, &records).map_err(|e| CliError::output(out, e))?;
    Ok(Outcome::new(format!(
        "wrote {} {} images to {}",
        entries.len(),
        header.format,
        out.display()
    ))
    .with(out.join(cellprobe::catalog::MANIFEST_FILE)))
}
