use std::fmt;

use serde::{Deserialize, Serialize};

use super::{CatalogError, CellClass};

pub const IMAGE_SIDE: usize = 64;
pub const CHANNELS: usize = 3;
/// Flattened length of one stimulus: 64 × 64 × RGB.
pub const IMAGE_LEN: usize = IMAGE_SIDE * IMAGE_SIDE * CHANNELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Phantom,
    Cgan,
    Dm,
}

impl Provenance {
    pub fn generator(self) -> Option<Generator> {
        match self {
            Provenance::Cgan => Some(Generator::Cgan),
            Provenance::Dm => Some(Generator::Dm),
            Provenance::Real | Provenance::Phantom => None,
        }
    }

    /// Real crops and phantoms both play the "real" role in a study.
    pub fn is_real(self) -> bool {
        self.generator().is_none()
    }
}

/// Which synthesis model produced a stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Cgan,
    Dm,
}

impl Generator {
    pub const ALL: [Generator; 2] = [Generator::Cgan, Generator::Dm];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Cgan => "cgan",
            Generator::Dm => "dm",
        }
    }

    pub fn provenance(self) -> Provenance {
        match self {
            Generator::Cgan => Provenance::Cgan,
            Generator::Dm => Provenance::Dm,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Generator {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cgan" => Ok(Generator::Cgan),
            "dm" => Ok(Generator::Dm),
            other => Err(CatalogError::Validation(format!("unknown generator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Exactly 64 × 64 interleaved RGB bytes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Pixels(Vec<u8>);

impl fmt::Debug for Pixels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pixels({} bytes)", self.0.len())
    }
}

impl Pixels {
    pub fn new(bytes: Vec<u8>) -> Result<Self, CatalogError> {
        if bytes.len() != IMAGE_LEN {
            return Err(CatalogError::Validation(format!(
                "image must be {IMAGE_SIDE}x{IMAGE_SIDE}x{CHANNELS} ({IMAGE_LEN} bytes), got {}",
                bytes.len()
            )));
        }
        Ok(Self(bytes))
    }

    /// Map generator outputs in `[-1, 1]` to bytes, clamping out-of-range values.
    pub fn from_unit_range(values: &[f64]) -> Result<Self, CatalogError> {
        if values.len() != IMAGE_LEN {
            return Err(CatalogError::Validation(format!(
                "sample has {} values, image needs {IMAGE_LEN}",
                values.len()
            )));
        }
        Ok(Self(values.iter().map(|&v| quantize_unit(v)).collect()))
    }

    /// Inverse of [`Pixels::from_unit_range`] (up to quantisation).
    pub fn to_unit_range(&self) -> Vec<f64> {
        self.0.iter().map(|&b| b as f64 / 127.5 - 1.0).collect()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * IMAGE_SIDE + x) * CHANNELS;
        [self.0[i], self.0[i + 1], self.0[i + 2]]
    }
}

/// `[-1, 1] → [0, 255]`, clamped and rounded. NaN maps to 0.
pub fn quantize_unit(v: f64) -> u8 {
    let scaled = (v + 1.0) * 127.5;
    if scaled.is_nan() {
        0
    } else {
        scaled.round().clamp(0.0, 255.0) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRecord {
    pub id: String,
    pub pixels: Pixels,
    pub provenance: Provenance,
    pub class_label: Option<CellClass>,
    pub split: Option<Split>,
}

impl ImageRecord {
    pub fn new(
        id: impl Into<String>,
        pixels: Pixels,
        provenance: Provenance,
        class_label: Option<CellClass>,
    ) -> Result<Self, CatalogError> {
        let id = id.into();
        validate_id(&id)?;
        if provenance.generator().is_some() && class_label.is_none() {
            return Err(CatalogError::Validation(format!(
                "synthetic record {id} must carry a class label"
            )));
        }
        Ok(Self {
            id,
            pixels,
            provenance,
            class_label,
            split: None,
        })
    }
}

/// Ids double as file stems, so they are restricted to `[A-Za-z0-9._-]`.
pub fn validate_id(id: &str) -> Result<(), CatalogError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(CatalogError::Validation(format!("invalid record id {id:?}")))
    }
}
