//! On-disk catalog: one PPM per record plus `manifest.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ppm::{decode_ppm, encode_ppm};
use super::{validate_id, CatalogError, CellClass, ImageRecord, Provenance, Split};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Metadata for one stored image; what the study and injection planners
/// work from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub file: String,
    #[serde(default)]
    pub class: Option<CellClass>,
    pub provenance: Provenance,
    #[serde(default)]
    pub split: Option<Split>,
}

impl ManifestEntry {
    pub fn for_record(record: &ImageRecord) -> Self {
        Self {
            id: record.id.clone(),
            file: format!("{}.ppm", record.id),
            class: record.class_label,
            provenance: record.provenance,
            split: record.split,
        }
    }
}

/// Write every record as `<id>.ppm` under `dir` and (re)write the manifest.
pub fn save_catalog(dir: &Path, records: &[ImageRecord]) -> Result<Vec<ManifestEntry>, CatalogError> {
    fs::create_dir_all(dir)?;
    let mut seen = std::collections::HashSet::new();
    let mut entries = Vec::with_capacity(records.len());
    for record in records {
        if !seen.insert(record.id.as_str()) {
            return Err(CatalogError::Validation(format!("duplicate record id {}", record.id)));
        }
        let entry = ManifestEntry::for_record(record);
        fs::write(dir.join(&entry.file), encode_ppm(&record.pixels))?;
        entries.push(entry);
    }
    write_manifest(dir, &entries)?;
    Ok(entries)
}

pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<(), CatalogError> {
    let text = serde_json::to_string_pretty(entries).expect("manifest serialises");
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Vec<ManifestEntry>, CatalogError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| CatalogError::Io(format!("{}: {e}", path.display())))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| CatalogError::Format(format!("{}: {e}", path.display())))?;
    for e in &entries {
        validate_id(&e.id)?;
        if e.file.contains('/') || e.file.contains('\\') || e.file.starts_with('.') {
            return Err(CatalogError::Validation(format!("unsafe file name {:?}", e.file)));
        }
        if e.provenance.generator().is_some() && e.class.is_none() {
            return Err(CatalogError::Validation(format!(
                "synthetic entry {} has no class",
                e.id
            )));
        }
    }
    Ok(entries)
}

/// Load manifest and pixels.
pub fn load_catalog(dir: &Path) -> Result<Vec<ImageRecord>, CatalogError> {
    load_manifest(dir)?
        .into_iter()
        .map(|e| {
            let path = dir.join(&e.file);
            let bytes = fs::read(&path).map_err(|err| CatalogError::Io(format!("{}: {err}", path.display())))?;
            let pixels =
                decode_ppm(&bytes).map_err(|err| CatalogError::Format(format!("{}: {err}", path.display())))?;
            let mut record = ImageRecord::new(e.id, pixels, e.provenance, e.class)?;
            record.split = e.split;
            Ok(record)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::render_phantom;

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let mut records: Vec<_> = CellClass::ALL.iter().map(|&c| render_phantom(c, 3)).collect();
        records[0].split = Some(Split::Train);
        let entries = save_catalog(dir.path(), &records).unwrap();
        assert_eq!(entries.len(), 7);
        assert_eq!(entries[0].file, "phantom-neutrophil-3.ppm");
        let back = load_catalog(dir.path()).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let r = render_phantom(CellClass::Mast, 1);
        assert!(save_catalog(dir.path(), &[r.clone(), r]).is_err());
    }

    #[test]
    fn manifest_rejects_path_escape() {
        let dir = tempfile::tempdir().unwrap();
        let entries = vec![ManifestEntry {
            id: "x".into(),
            file: "../x.ppm".into(),
            class: None,
            provenance: Provenance::Real,
            split: None,
        }];
        write_manifest(dir.path(), &entries).unwrap();
        assert!(load_manifest(dir.path()).is_err());
    }
}
