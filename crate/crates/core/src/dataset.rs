//! Flat labelled training data shared by the two generators.

use rand_distr::{Distribution, Normal};

use crate::catalog::{CatalogError, CellClass, ImageRecord, IMAGE_LEN};
use crate::nn::Tensor;
use crate::rng;

/// `len` rows of `dim` reals, each with a class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    dim: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(dim: usize, values: Vec<f64>, labels: Vec<usize>) -> Result<Self, CatalogError> {
        if dim == 0 || values.len() != dim * labels.len() {
            return Err(CatalogError::Validation(format!(
                "{} values do not form {} rows of dim {dim}",
                values.len(),
                labels.len()
            )));
        }
        Ok(Self { dim, values, labels })
    }

    /// Image records mapped to `[-1, 1]`; labels index into `classes`.
    pub fn from_records(records: &[ImageRecord], classes: &[CellClass]) -> Result<Self, CatalogError> {
        let mut values = Vec::with_capacity(records.len() * IMAGE_LEN);
        let mut labels = Vec::with_capacity(records.len());
        for r in records {
            let class = r
                .class_label
                .ok_or_else(|| CatalogError::Validation(format!("record {} has no class label", r.id)))?;
            let idx = classes
                .iter()
                .position(|&c| c == class)
                .ok_or_else(|| CatalogError::Validation(format!("class {class} not in class set")))?;
            values.extend(r.pixels.to_unit_range());
            labels.push(idx);
        }
        Self::new(IMAGE_LEN, values, labels)
    }

    /// Isotropic Gaussian blobs: `per_class` points around each centre.
    pub fn gaussian_mixture(centres: &[Vec<f64>], std: f64, per_class: usize, seed: u64) -> Self {
        let dim = centres[0].len();
        let mut rng = rng::seeded(seed);
        let noise = Normal::new(0.0, std).expect("valid std");
        let mut values = Vec::with_capacity(centres.len() * per_class * dim);
        let mut labels = Vec::with_capacity(centres.len() * per_class);
        for _ in 0..per_class {
            for (c, centre) in centres.iter().enumerate() {
                values.extend(centre.iter().map(|m| m + noise.sample(&mut rng)));
                labels.push(c);
            }
        }
        Self { dim, values, labels }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn class_counts(&self, num_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_classes];
        for &l in &self.labels {
            if l < num_classes {
                counts[l] += 1;
            }
        }
        counts
    }

    /// Rows at `indices`, flattened, with their labels.
    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<usize>) {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        (values, labels)
    }
}

/// Row-wise `[data ‖ extra ‖ one_hot(label)]` as a `rows × width` matrix.
pub(crate) fn conditioned_input(
    data: &[f64],
    dim: usize,
    extra: Option<(&[f64], usize)>,
    labels: &[usize],
    num_classes: usize,
) -> Tensor {
    let rows = labels.len();
    let extra_dim = extra.map_or(0, |(_, d)| d);
    let width = dim + extra_dim + num_classes;
    let mut out = Vec::with_capacity(rows * width);
    for (r, &label) in labels.iter().enumerate() {
        out.extend_from_slice(&data[r * dim..(r + 1) * dim]);
        if let Some((e, d)) = extra {
            out.extend_from_slice(&e[r * d..(r + 1) * d]);
        }
        out.extend((0..num_classes).map(|c| if c == label { 1.0 } else { 0.0 }));
    }
    Tensor::matrix(rows, width, out).expect("sized above")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditioned_layout() {
        let t = conditioned_input(&[1.0, 2.0, 3.0, 4.0], 2, Some((&[9.0, 8.0], 1)), &[1, 0], 2);
        assert_eq!(t.shape(), &[2, 5]);
        assert_eq!(t.values(), &[1.0, 2.0, 9.0, 0.0, 1.0, 3.0, 4.0, 8.0, 1.0, 0.0]);
    }

    #[test]
    fn mixture_counts() {
        let d = LabeledSet::gaussian_mixture(&[vec![-2.0, 0.0], vec![2.0, 0.0]], 0.3, 50, 1);
        assert_eq!(d.len(), 100);
        assert_eq!(d.class_counts(2), vec![50, 50]);
        let mean_x: f64 = (0..d.len())
            .filter(|&i| d.labels()[i] == 1)
            .map(|i| d.row(i)[0])
            .sum::<f64>()
            / 50.0;
        assert!((mean_x - 2.0).abs() < 0.15);
    }

    #[test]
    fn shape_validated() {
        assert!(LabeledSet::new(2, vec![0.0; 5], vec![0, 1]).is_err());
    }
}
