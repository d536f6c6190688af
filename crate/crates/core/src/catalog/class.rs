use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CatalogError;

/// The seven lung-fluid cell types of the reference BALF data set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Neutrophil,
    Multinuclear,
    Mast,
    Macrophage,
    Lymphocyte,
    Erythrocyte,
    Eosinophil,
}

pub const NUM_CLASSES: usize = 7;

/// Total annotated cells as reported for the reference data set. The
/// per-class counts below sum to [`REFERENCE_CLASS_SUM`] instead.
pub const REFERENCE_TOTAL: usize = 87_738;

/// Sum of the per-class reference counts.
pub const REFERENCE_CLASS_SUM: usize = 85_758;

impl CellClass {
    pub const ALL: [CellClass; NUM_CLASSES] = [
        CellClass::Neutrophil,
        CellClass::Multinuclear,
        CellClass::Mast,
        CellClass::Macrophage,
        CellClass::Lymphocyte,
        CellClass::Erythrocyte,
        CellClass::Eosinophil,
    ];

    /// Bounding-box annotation count in the reference data set.
    pub fn reference_count(self) -> usize {
        match self {
            CellClass::Neutrophil => 12_556,
            CellClass::Multinuclear => 310,
            CellClass::Mast => 1_553,
            CellClass::Macrophage => 24_498,
            CellClass::Lymphocyte => 46_397,
            CellClass::Erythrocyte => 339,
            CellClass::Eosinophil => 105,
        }
    }

    /// Reference prevalence (normalised per-class counts) indexed like
    /// [`CellClass::ALL`].
    pub fn reference_prior() -> [f64; NUM_CLASSES] {
        Self::ALL.map(|c| c.reference_count() as f64 / REFERENCE_CLASS_SUM as f64)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CellClass::Neutrophil => "neutrophil",
            CellClass::Multinuclear => "multinuclear",
            CellClass::Mast => "mast",
            CellClass::Macrophage => "macrophage",
            CellClass::Lymphocyte => "lymphocyte",
            CellClass::Erythrocyte => "erythrocyte",
            CellClass::Eosinophil => "eosinophil",
        }
    }
}

impl fmt::Display for CellClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellClass {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CatalogError::Validation(format!("unknown cell class {s:?}")))
    }
}
