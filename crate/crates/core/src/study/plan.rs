use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Answer, StudyError};
use crate::catalog::{Generator, ManifestEntry, Provenance};
use crate::rng;

/// One forced choice: exactly one of `left`/`right` is synthetic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTrial {
    pub id: String,
    pub left: String,
    pub right: String,
    /// `Left` or `Right`.
    pub fake_side: Answer,
    pub generator: Generator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleTrial {
    pub id: String,
    pub stimulus: String,
    /// `Real` or `Fake`; fake exactly when `generator` is set.
    pub truth: Answer,
    #[serde(default)]
    pub generator: Option<Generator>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialKind {
    Pair,
    Single,
}

impl TrialKind {
    pub fn name(self) -> &'static str {
        match self {
            TrialKind::Pair => "pair",
            TrialKind::Single => "single",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Trial<'a> {
    Pair(&'a PairTrial),
    Single(&'a SingleTrial),
}

impl<'a> Trial<'a> {
    pub fn id(&self) -> &'a str {
        match *self {
            Trial::Pair(p) => &p.id,
            Trial::Single(s) => &s.id,
        }
    }

    pub fn kind(&self) -> TrialKind {
        match self {
            Trial::Pair(_) => TrialKind::Pair,
            Trial::Single(_) => TrialKind::Single,
        }
    }

    pub fn truth(&self) -> Answer {
        match self {
            Trial::Pair(p) => p.fake_side,
            Trial::Single(s) => s.truth,
        }
    }

    pub fn generator(&self) -> Option<Generator> {
        match self {
            Trial::Pair(p) => Some(p.generator),
            Trial::Single(s) => s.generator,
        }
    }

    pub fn stimuli(&self) -> Vec<&'a str> {
        match *self {
            Trial::Pair(p) => vec![p.left.as_str(), p.right.as_str()],
            Trial::Single(s) => vec![s.stimulus.as_str()],
        }
    }
}

/// How many trials of each kind a plan holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyComposition {
    /// Pair trials per generator.
    pub pairs_per_generator: usize,
    /// Single trials per generator, and also the number of real singles.
    pub singles_per_source: usize,
}

impl Default for StudyComposition {
    fn default() -> Self {
        Self {
            pairs_per_generator: 10,
            singles_per_source: 10,
        }
    }
}

impl StudyComposition {
    pub fn trial_count(&self) -> usize {
        2 * self.pairs_per_generator + 3 * self.singles_per_source
    }

    /// Distinct real stimuli needed: one partner per pair plus the real singles.
    pub fn real_needed(&self) -> usize {
        2 * self.pairs_per_generator + self.singles_per_source
    }

    pub fn synthetic_needed(&self) -> usize {
        self.pairs_per_generator + self.singles_per_source
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyPlan {
    pub id: String,
    pub pair_trials: Vec<PairTrial>,
    pub single_trials: Vec<SingleTrial>,
    pub seed: u64,
}

impl StudyPlan {
    pub fn trial_count(&self) -> usize {
        self.pair_trials.len() + self.single_trials.len()
    }

    pub fn trials(&self) -> impl Iterator<Item = Trial<'_>> {
        self.pair_trials
            .iter()
            .map(Trial::Pair)
            .chain(self.single_trials.iter().map(Trial::Single))
    }

    pub fn trial(&self, id: &str) -> Option<Trial<'_>> {
        self.trials().find(|t| t.id() == id)
    }

    /// Every stimulus id referenced by the plan, pairs first.
    pub fn stimuli(&self) -> Vec<&str> {
        self.trials().flat_map(|t| t.stimuli()).collect()
    }
}

/// Default study: 10 + 10 pairs and 10 + 10 + 10 singles, no stimulus reused.
pub fn build_study(catalog: &[ManifestEntry], seed: u64) -> Result<StudyPlan, StudyError> {
    build_study_with(catalog, StudyComposition::default(), seed)
}

pub fn build_study_with(
    catalog: &[ManifestEntry],
    composition: StudyComposition,
    seed: u64,
) -> Result<StudyPlan, StudyError> {
    let mut seen = HashSet::new();
    if let Some(dup) = catalog.iter().find(|e| !seen.insert(e.id.as_str())) {
        return Err(StudyError::Validation(format!("duplicate catalog id {:?}", dup.id)));
    }

    // Sorting first makes the plan a function of the catalog's contents,
    // not of manifest order.
    let pool = |want: fn(Provenance) -> bool| {
        let mut ids: Vec<&str> = catalog
            .iter()
            .filter(|e| want(e.provenance))
            .map(|e| e.id.as_str())
            .collect();
        ids.sort_unstable();
        ids
    };
    let mut real = pool(Provenance::is_real);
    let mut cgan = pool(|p| p == Provenance::Cgan);
    let mut dm = pool(|p| p == Provenance::Dm);

    let shortfalls: Vec<String> = [
        ("real", real.len(), composition.real_needed()),
        ("cgan", cgan.len(), composition.synthetic_needed()),
        ("dm", dm.len(), composition.synthetic_needed()),
    ]
    .into_iter()
    .filter(|&(_, have, need)| have < need)
    .map(|(name, have, need)| format!("{name}: need {need}, have {have}"))
    .collect();
    if !shortfalls.is_empty() {
        return Err(StudyError::Validation(format!(
            "insufficient stimuli ({})",
            shortfalls.join("; ")
        )));
    }

    let mut rng = rng::seeded(seed);
    real.shuffle(&mut rng);
    cgan.shuffle(&mut rng);
    dm.shuffle(&mut rng);

    let n_pairs = composition.pairs_per_generator;
    let n_single = composition.singles_per_source;
    let mut partners = real[..2 * n_pairs].iter();
    let mut pairs: Vec<(Generator, &str, &str)> = Vec::with_capacity(2 * n_pairs);
    for (generator, ids) in [(Generator::Cgan, &cgan), (Generator::Dm, &dm)] {
        for fake in &ids[..n_pairs] {
            pairs.push((generator, fake, partners.next().expect("enough partners")));
        }
    }
    pairs.shuffle(&mut rng);
    let pair_trials = pairs
        .into_iter()
        .enumerate()
        .map(|(i, (generator, fake, real))| {
            let fake_left = rng.random_bool(0.5);
            let (left, right) = if fake_left { (fake, real) } else { (real, fake) };
            PairTrial {
                id: format!("pair-{:02}", i + 1),
                left: left.to_string(),
                right: right.to_string(),
                fake_side: if fake_left { Answer::Left } else { Answer::Right },
                generator,
            }
        })
        .collect();

    let mut singles: Vec<(&str, Option<Generator>)> = Vec::with_capacity(3 * n_single);
    singles.extend(
        cgan[n_pairs..n_pairs + n_single]
            .iter()
            .map(|&id| (id, Some(Generator::Cgan))),
    );
    singles.extend(
        dm[n_pairs..n_pairs + n_single]
            .iter()
            .map(|&id| (id, Some(Generator::Dm))),
    );
    singles.extend(real[2 * n_pairs..2 * n_pairs + n_single].iter().map(|&id| (id, None)));
    singles.shuffle(&mut rng);
    let single_trials = singles
        .into_iter()
        .enumerate()
        .map(|(i, (id, generator))| SingleTrial {
            id: format!("single-{:02}", i + 1),
            stimulus: id.to_string(),
            truth: if generator.is_some() {
                Answer::Fake
            } else {
                Answer::Real
            },
            generator,
        })
        .collect();

    Ok(StudyPlan {
        id: format!("study-{seed}"),
        pair_trials,
        single_trials,
        seed,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn catalog(real: usize, cgan: usize, dm: usize) -> Vec<ManifestEntry> {
        let entry = |id: String, provenance| ManifestEntry {
            file: format!("{id}.ppm"),
            id,
            class: Some(crate::CellClass::Lymphocyte),
            provenance,
            split: None,
        };
        (0..real)
            .map(|i| {
                entry(
                    format!("real-{i}"),
                    if i % 2 == 0 {
                        Provenance::Real
                    } else {
                        Provenance::Phantom
                    },
                )
            })
            .chain((0..cgan).map(|i| entry(format!("cgan-{i}"), Provenance::Cgan)))
            .chain((0..dm).map(|i| entry(format!("dm-{i}"), Provenance::Dm)))
            .collect()
    }

    #[test]
    fn default_composition() {
        let plan = build_study(&catalog(40, 25, 25), 7).unwrap();
        assert_eq!(plan.pair_trials.len(), 20);
        assert_eq!(plan.single_trials.len(), 30);
        let pairs_of = |g| plan.pair_trials.iter().filter(|p| p.generator == g).count();
        assert_eq!((pairs_of(Generator::Cgan), pairs_of(Generator::Dm)), (10, 10));
        let singles_of = |g| plan.single_trials.iter().filter(|s| s.generator == g).count();
        assert_eq!(
            (
                singles_of(Some(Generator::Cgan)),
                singles_of(Some(Generator::Dm)),
                singles_of(None)
            ),
            (10, 10, 10)
        );
        let stimuli = plan.stimuli();
        assert_eq!(stimuli.len(), 70);
        assert_eq!(stimuli.iter().collect::<HashSet<_>>().len(), 70);
        assert_eq!(plan.pair_trials[0].id, "pair-01");
        assert_eq!(plan.single_trials[29].id, "single-30");
    }

    #[test]
    fn pair_sides_are_consistent() {
        let plan = build_study(&catalog(30, 20, 20), 3).unwrap();
        for p in &plan.pair_trials {
            let fake = if p.fake_side == Answer::Left { &p.left } else { &p.right };
            let real = if p.fake_side == Answer::Left { &p.right } else { &p.left };
            assert!(fake.starts_with(p.generator.name()));
            assert!(real.starts_with("real-"));
        }
        for s in &plan.single_trials {
            assert_eq!(s.truth == Answer::Fake, s.generator.is_some());
        }
    }

    #[test]
    fn deterministic_and_order_invariant() {
        let mut cat = catalog(35, 22, 21);
        let a = build_study(&cat, 11).unwrap();
        cat.reverse();
        assert_eq!(build_study(&cat, 11).unwrap(), a);
        assert_ne!(build_study(&cat, 12).unwrap(), a);
    }

    #[test]
    fn shortfall_is_named() {
        let err = build_study(&catalog(30, 20, 5), 1).unwrap_err();
        assert!(err.to_string().contains("dm: need 20, have 5"), "{err}");
        let err = build_study(&catalog(20, 20, 20), 1).unwrap_err();
        assert!(err.to_string().contains("real: need 30, have 20"), "{err}");
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut cat = catalog(30, 20, 20);
        cat.push(cat[0].clone());
        assert!(matches!(build_study(&cat, 0), Err(StudyError::Validation(_))));
    }
}
