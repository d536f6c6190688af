use serde::{Deserialize, Serialize};

use super::DiffusionError;

/// Per-step noise variances `β_t` (t = 1..=T) with `α_t = 1 − β_t` and
/// `ᾱ_t = Π α_s`. `ᾱ_0` is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleFile", into = "ScheduleFile")]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    steps: usize,
    betas: Vec<f64>,
}

impl From<NoiseSchedule> for ScheduleFile {
    fn from(s: NoiseSchedule) -> Self {
        Self {
            steps: s.steps(),
            betas: s.betas,
        }
    }
}

impl TryFrom<ScheduleFile> for NoiseSchedule {
    type Error = DiffusionError;

    fn try_from(f: ScheduleFile) -> Result<Self, DiffusionError> {
        if f.steps != f.betas.len() {
            return Err(DiffusionError::Validation(format!(
                "schedule declares {} steps but lists {} betas",
                f.steps,
                f.betas.len()
            )));
        }
        NoiseSchedule::from_betas(f.betas)
    }
}

/// Endpoints of the reference 1000-step linear schedule.
pub const BETA_START: f64 = 1e-4;
pub const BETA_END: f64 = 0.02;

impl NoiseSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self, DiffusionError> {
        if betas.is_empty() {
            return Err(DiffusionError::Validation("schedule needs at least one step".into()));
        }
        if let Some((i, b)) = betas.iter().enumerate().find(|(_, &b)| !(b > 0.0 && b < 1.0)) {
            return Err(DiffusionError::Validation(format!(
                "beta_{} = {b} outside (0, 1)",
                i + 1
            )));
        }
        let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
        let alpha_bars = alphas
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            betas,
            alphas,
            alpha_bars,
        })
    }

    /// `β` evenly spaced from `start` to `end` over `steps`.
    pub fn linear(steps: usize, start: f64, end: f64) -> Result<Self, DiffusionError> {
        let betas = match steps {
            0 => Vec::new(),
            1 => vec![start],
            n => (0..n)
                .map(|i| start + (end - start) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::from_betas(betas)
    }

    /// Linear schedule with the reference endpoints rescaled by `1000 / T`,
    /// so that `ᾱ_T` is close to zero for any `T` (end capped at 0.999).
    pub fn scaled_linear(steps: usize) -> Result<Self, DiffusionError> {
        let scale = 1000.0 / steps.max(1) as f64;
        Self::linear(steps, (BETA_START * scale).min(0.999), (BETA_END * scale).min(0.999))
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    fn index(&self, t: usize) -> Result<usize, DiffusionError> {
        if t == 0 || t > self.steps() {
            Err(DiffusionError::Validation(format!(
                "step {t} outside 1..={}",
                self.steps()
            )))
        } else {
            Ok(t - 1)
        }
    }

    pub fn beta(&self, t: usize) -> Result<f64, DiffusionError> {
        Ok(self.betas[self.index(t)?])
    }

    pub fn alpha(&self, t: usize) -> Result<f64, DiffusionError> {
        Ok(self.alphas[self.index(t)?])
    }

    /// `ᾱ_t` for `t` in `0..=T`.
    pub fn alpha_bar(&self, t: usize) -> Result<f64, DiffusionError> {
        if t == 0 {
            Ok(1.0)
        } else {
            Ok(self.alpha_bars[self.index(t)?])
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }
}
