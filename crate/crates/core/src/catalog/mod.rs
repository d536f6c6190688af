//! Cell taxonomy, image records and their storage, the phantom renderer,
//! stratified splitting and class balancing.

mod balance;
mod class;
mod phantom;
pub mod ppm;
mod record;
mod split;
mod store;

pub use balance::{class_weights, oversample, oversample_indices, record_class_weights};
pub use class::{CellClass, NUM_CLASSES, REFERENCE_CLASS_SUM, REFERENCE_TOTAL};
pub use phantom::{describe_phantom, rasterize, render_phantom, Blob, PhantomSpec};
pub use record::{
    quantize_unit, validate_id, Generator, ImageRecord, Pixels, Provenance, Split, CHANNELS, IMAGE_LEN, IMAGE_SIDE,
};
pub use split::{stratified_split, SplitSpec};
pub use store::{load_catalog, load_manifest, save_catalog, write_manifest, ManifestEntry, MANIFEST_FILE};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CatalogError {
    fn from(e: std::io::Error) -> Self {
        CatalogError::Io(e.to_string())
    }
}
