use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{CatalogError, ImageRecord, Split};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CatalogError> {
        let f = [self.train_fraction, self.val_fraction, self.test_fraction];
        if f.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return Err(CatalogError::Validation(format!(
                "split fractions must lie in (0, 1), got {f:?}"
            )));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CatalogError::Validation(format!(
                "split fractions must sum to 1, got {f:?}"
            )));
        }
        Ok(())
    }

    /// `[train, val, test]` sizes for `n` items by largest remainder; ties
    /// go to the earlier split.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let quotas = [self.train_fraction, self.val_fraction, self.test_fraction].map(|f| f * n as f64);
        let mut sizes = quotas.map(|q| (q + 1e-9).floor() as usize);
        let mut order = [0usize, 1, 2];
        let rem = |i: usize| quotas[i] - sizes[i] as f64;
        order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
        let assigned: usize = sizes.iter().sum();
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        sizes
    }
}

/// Assign a split to every record, stratified by class. Each class is
/// shuffled with its own seeded stream, then cut by [`SplitSpec::sizes`].
pub fn stratified_split(records: &[ImageRecord], spec: &SplitSpec) -> Result<Vec<ImageRecord>, CatalogError> {
    spec.validate()?;
    let mut by_class = std::collections::BTreeMap::<_, Vec<usize>>::new();
    for (i, r) in records.iter().enumerate() {
        let class = r
            .class_label
            .ok_or_else(|| CatalogError::Validation(format!("record {} has no class label", r.id)))?;
        by_class.entry(class).or_default().push(i);
    }
    let mut out = records.to_vec();
    for (class, mut indices) in by_class {
        let mut rng = rng::stream(spec.seed, class.index() as u64);
        indices.shuffle(&mut rng);
        let [train, val, _] = spec.sizes(indices.len());
        for (pos, &i) in indices.iter().enumerate() {
            out[i].split = Some(if pos < train {
                Split::Train
            } else if pos < train + val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{render_phantom, CellClass};
    use proptest::prelude::*;

    fn spec() -> SplitSpec {
        SplitSpec::default()
    }

    #[test]
    fn exact_divisions() {
        assert_eq!(spec().sizes(10), [8, 1, 1]);
        assert_eq!(spec().sizes(20), [16, 2, 2]);
    }

    /// Enumerate every way to hand out the leftover items after flooring
    /// and keep those within ±1 of each quota.
    fn admissible(n: usize, s: &SplitSpec) -> Vec<[usize; 3]> {
        let q = [s.train_fraction, s.val_fraction, s.test_fraction].map(|f| f * n as f64);
        let mut out = Vec::new();
        for a in 0..=n {
            for b in 0..=n - a {
                let c = n - a - b;
                let sizes = [a, b, c];
                if (0..3).all(|i| (sizes[i] as f64 - q[i]).abs() <= 1.0) {
                    out.push(sizes);
                }
            }
        }
        out
    }

    #[test]
    fn eosinophil_count_rounding() {
        let got = spec().sizes(105);
        assert!(got == [84, 11, 10] || got == [84, 10, 11]);
        assert!(admissible(105, &spec()).contains(&got));
    }

    #[test]
    fn per_class_counts() {
        let records: Vec<_> = CellClass::ALL
            .iter()
            .flat_map(|&c| (0..20).map(move |s| render_phantom(c, s)))
            .collect();
        let out = stratified_split(&records, &SplitSpec { seed: 5, ..spec() }).unwrap();
        for c in CellClass::ALL {
            let count = |s| {
                out.iter()
                    .filter(|r| r.class_label == Some(c) && r.split == Some(s))
                    .count()
            };
            assert_eq!([count(Split::Train), count(Split::Val), count(Split::Test)], [16, 2, 2]);
        }
        // ids untouched, order preserved
        assert!(out.iter().zip(&records).all(|(a, b)| a.id == b.id));
    }

    #[test]
    fn unlabeled_rejected() {
        let mut r = render_phantom(CellClass::Mast, 1);
        r.class_label = None;
        assert!(stratified_split(&[r], &spec()).is_err());
    }

    #[test]
    fn bad_fractions_rejected() {
        let s = SplitSpec {
            train_fraction: 0.7,
            ..spec()
        };
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn sizes_partition_within_one(n in 0usize..2000, a in 0.05f64..0.9, b in 0.05f64..0.9) {
            prop_assume!(a + b < 0.95);
            let s = SplitSpec { train_fraction: a, val_fraction: b, test_fraction: 1.0 - a - b, seed: 0 };
            let sizes = s.sizes(n);
            prop_assert_eq!(sizes.iter().sum::<usize>(), n);
            let q = [a, b, 1.0 - a - b].map(|f| f * n as f64);
            for i in 0..3 {
                prop_assert!((sizes[i] as f64 - q[i]).abs() <= 1.0);
            }
        }
    }
}
