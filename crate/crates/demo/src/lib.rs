//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The plain functions are usable (and tested) natively; the `#[wasm_bindgen]`
//! wrappers only convert errors.

use cellprobe::catalog::{render_phantom, IMAGE_SIDE};
use cellprobe::dataset::LabeledSet;
use cellprobe::diffusion::{reverse_sample, DiffusionError, GaussianOracle, NoiseSchedule, ReverseVariance};
use cellprobe::gan::{generate, train, GanConfig, GanError, GanModel};
use cellprobe::CellClass;
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Gan(#[from] GanError),
}

impl From<DemoError> for JsValue {
    fn from(e: DemoError) -> Self {
        JsError::new(&e.to_string()).into()
    }
}

#[wasm_bindgen(js_name = classNames)]
pub fn class_names() -> Vec<String> {
    CellClass::ALL.iter().map(|c| c.name().to_string()).collect()
}

#[wasm_bindgen(js_name = imageSide)]
pub fn image_side() -> usize {
    IMAGE_SIDE
}

/// A phantom cell as RGBA, ready for `ImageData`.
pub fn phantom_rgba(class: usize, seed: u64) -> Result<Vec<u8>, DemoError> {
    let class = *CellClass::ALL
        .get(class)
        .ok_or_else(|| DemoError::Input(format!("class index {class} out of range")))?;
    let rec = render_phantom(class, seed);
    Ok(rec
        .pixels
        .as_bytes()
        .chunks_exact(3)
        .flat_map(|p| [p[0], p[1], p[2], 255])
        .collect())
}

#[wasm_bindgen(js_name = phantomRgba)]
pub fn phantom_rgba_js(class: usize, seed: u64) -> Result<Vec<u8>, JsValue> {
    Ok(phantom_rgba(class, seed)?)
}

/// Reverse-diffusion samples of `N(mean, variance)` drawn with the exact
/// noise predictor, binned next to the target density.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct ReverseRun {
    edges: Vec<f64>,
    empirical: Vec<f64>,
    analytic: Vec<f64>,
    mean: f64,
    variance: f64,
}

#[wasm_bindgen]
impl ReverseRun {
    /// `bins + 1` bin edges spanning mean ± 4σ.
    pub fn edges(&self) -> Vec<f64> {
        self.edges.clone()
    }
    /// Empirical density per bin.
    pub fn empirical(&self) -> Vec<f64> {
        self.empirical.clone()
    }
    /// Target density at each bin centre.
    pub fn analytic(&self) -> Vec<f64> {
        self.analytic.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn mean(&self) -> f64 {
        self.mean
    }
    #[wasm_bindgen(getter)]
    pub fn variance(&self) -> f64 {
        self.variance
    }
}

pub fn reverse_histogram(
    mean: f64,
    variance: f64,
    steps: usize,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<ReverseRun, DemoError> {
    if samples == 0 || bins == 0 {
        return Err(DemoError::Input("samples and bins must be positive".into()));
    }
    let schedule = NoiseSchedule::scaled_linear(steps)?;
    let oracle = GaussianOracle::univariate(mean, variance)?;
    let xs: Vec<f64> = reverse_sample(&oracle, &schedule, 0, samples, seed, ReverseVariance::Beta)?
        .into_iter()
        .flatten()
        .collect();

    let sd = variance.sqrt();
    let (lo, width) = (mean - 4.0 * sd, 8.0 * sd / bins as f64);
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for x in &xs {
        let b = ((x - lo) / width).floor();
        if (0.0..bins as f64).contains(&b) {
            counts[b as usize] += 1;
        }
    }
    let n = xs.len() as f64;
    let empirical = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let analytic = edges
        .windows(2)
        .map(|w| {
            let z = (0.5 * (w[0] + w[1]) - mean) / sd;
            (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    Ok(ReverseRun {
        edges,
        empirical,
        analytic,
        mean: m,
        variance: v,
    })
}

#[wasm_bindgen(js_name = reverseHistogram)]
pub fn reverse_histogram_js(
    mean: f64,
    variance: f64,
    steps: usize,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<ReverseRun, JsValue> {
    Ok(reverse_histogram(mean, variance, steps, samples, bins, seed)?)
}

/// Class centres of the toy 2-D problem.
pub const TOY_MODES: [[f64; 2]; 2] = [[-2.0, 0.0], [2.0, 0.0]];

/// A conditional GAN on two Gaussian blobs, trained a few epochs at a time.
#[wasm_bindgen]
pub struct ToyGan {
    model: GanModel,
    data: LabeledSet,
    config: GanConfig,
    epochs: usize,
}

impl ToyGan {
    pub fn create(seed: u64) -> Result<Self, DemoError> {
        let config = GanConfig {
            seed,
            ..GanConfig::toy()
        };
        let data = LabeledSet::gaussian_mixture(&TOY_MODES.map(|m| m.to_vec()), 0.3, 1000, seed);
        Ok(Self {
            model: GanModel::new(&config)?,
            data,
            config,
            epochs: 0,
        })
    }

    /// Trains `epochs` more epochs and returns the last generator loss.
    pub fn train_more(&mut self, epochs: usize) -> Result<f64, DemoError> {
        let config = GanConfig {
            epochs,
            seed: self.config.seed.wrapping_add(self.epochs as u64),
            ..self.config.clone()
        };
        let history = train(&mut self.model, &self.data, &config)?;
        self.epochs += epochs;
        Ok(history.last().map_or(f64::NAN, |s| s.generator))
    }

    /// `count` samples of `class`, flattened as `x0, y0, x1, y1, …`.
    pub fn samples(&self, class: usize, count: usize, seed: u64) -> Result<Vec<f64>, DemoError> {
        Ok(generate(&self.model, class, count, seed)?.concat())
    }

    /// Share of samples lying nearer their own class centre.
    pub fn conditioning(&self, count: usize, seed: u64) -> Result<f64, DemoError> {
        let mut hits = 0;
        for class in 0..2 {
            for p in generate(&self.model, class, count, seed + class as u64)? {
                let d = |m: [f64; 2]| (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2);
                hits += usize::from(d(TOY_MODES[class]) < d(TOY_MODES[1 - class]));
            }
        }
        Ok(hits as f64 / (2 * count) as f64)
    }
}

#[wasm_bindgen]
impl ToyGan {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<ToyGan, JsValue> {
        Ok(Self::create(seed)?)
    }

    #[wasm_bindgen(getter)]
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Real training points, flattened; classes are in `labels()`.
    pub fn data(&self) -> Vec<f64> {
        (0..self.data.len()).flat_map(|i| self.data.row(i).to_vec()).collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.data.labels().iter().map(|&l| l as u32).collect()
    }

    #[wasm_bindgen(js_name = train)]
    pub fn train_js(&mut self, epochs: usize) -> Result<f64, JsValue> {
        Ok(self.train_more(epochs)?)
    }

    #[wasm_bindgen(js_name = sample)]
    pub fn sample_js(&self, class: usize, count: usize, seed: u64) -> Result<Vec<f64>, JsValue> {
        Ok(self.samples(class, count, seed)?)
    }

    #[wasm_bindgen(js_name = conditioning)]
    pub fn conditioning_js(&self, count: usize, seed: u64) -> Result<f64, JsValue> {
        Ok(self.conditioning(count, seed)?)
    }
}
