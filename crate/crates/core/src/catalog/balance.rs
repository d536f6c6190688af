//! Class-imbalance handling: loss weights and random oversampling.

use rand::Rng as _;

use super::{CatalogError, CellClass, ImageRecord};
use crate::rng;

/// `weight(c) = total / (k · count(c))`, so uniform counts give weight 1
/// and `weight(c) · count(c)` is the same for every class.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>, CatalogError> {
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(CatalogError::Validation(format!("class {empty} has no records")));
    }
    if counts.is_empty() {
        return Err(CatalogError::Validation("no classes".into()));
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts.iter().map(|&c| total as f64 / (k * c as f64)).collect())
}

fn record_class_indices(records: &[ImageRecord], classes: &[CellClass]) -> Result<Vec<usize>, CatalogError> {
    records
        .iter()
        .map(|r| {
            let label = r
                .class_label
                .ok_or_else(|| CatalogError::Validation(format!("record {} has no class label", r.id)))?;
            classes.iter().position(|&c| c == label).ok_or_else(|| {
                CatalogError::Validation(format!("record {} has class {label} outside the class set", r.id))
            })
        })
        .collect()
}

fn counts_by_index(labels: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; num_classes];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

fn require_all_classes(labels: &[usize], classes: &[CellClass]) -> Result<Vec<usize>, CatalogError> {
    let counts = counts_by_index(labels, classes.len());
    match counts.iter().position(|&c| c == 0) {
        Some(i) => Err(CatalogError::Validation(format!("class {} has no records", classes[i]))),
        None => Ok(counts),
    }
}

/// Per-class weights for `records` over `classes` (indexed like `classes`).
pub fn record_class_weights(records: &[ImageRecord], classes: &[CellClass]) -> Result<Vec<f64>, CatalogError> {
    let labels = record_class_indices(records, classes)?;
    class_weights(&require_all_classes(&labels, classes)?)
}

/// Indices of a balanced resample of items labelled `labels`: every
/// original index once, in order, followed by seeded random duplicates
/// until each class reaches the largest class count.
pub fn oversample_indices(labels: &[usize], num_classes: usize, seed: u64) -> Result<Vec<usize>, CatalogError> {
    let mut members = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        let slot = members
            .get_mut(l)
            .ok_or_else(|| CatalogError::Validation(format!("label {l} out of range")))?;
        slot.push(i);
    }
    if let Some(empty) = members.iter().position(|m| m.is_empty()) {
        return Err(CatalogError::Validation(format!("class {empty} has no records")));
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = rng::seeded(seed);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for class_members in &members {
        for _ in class_members.len()..target {
            out.push(class_members[rng.random_range(0..class_members.len())]);
        }
    }
    Ok(out)
}

/// Balanced copy of `records` over `classes`.
pub fn oversample(records: &[ImageRecord], classes: &[CellClass], seed: u64) -> Result<Vec<ImageRecord>, CatalogError> {
    let labels = record_class_indices(records, classes)?;
    require_all_classes(&labels, classes)?;
    let indices = oversample_indices(&labels, classes.len(), seed)?;
    Ok(indices.into_iter().map(|i| records[i].clone()).collect())
}
