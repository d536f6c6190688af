use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::InjectError;
use crate::catalog::{CellClass, ManifestEntry, NUM_CLASSES};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectionConfig {
    pub probe_fraction: f64,
    /// Largest allowed total-variation distance between the probe class mix
    /// and `prior` (or the quantisation floor, if that is larger).
    pub tv_budget: f64,
    /// Class prior in [`CellClass::ALL`] order; defaults to the reference
    /// data set's class frequencies.
    pub prior: [f64; NUM_CLASSES],
}

impl Default for InjectionConfig {
    fn default() -> Self {
        Self {
            probe_fraction: 0.5,
            tv_budget: 0.1,
            prior: CellClass::reference_prior(),
        }
    }
}

/// Server-side record of one task item: the annotator never sees `is_probe`
/// or `class`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanItem {
    pub id: String,
    pub file: String,
    pub is_probe: bool,
    /// Ground-truth class for probes.
    #[serde(default)]
    pub class: Option<CellClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub task: String,
    pub items: Vec<PlanItem>,
    pub probe_fraction: f64,
    pub seed: u64,
}

/// Annotator-facing item: an id and an image file, nothing else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorItem {
    pub id: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatorManifest {
    pub task: String,
    pub items: Vec<AnnotatorItem>,
}

impl InjectionPlan {
    pub fn probe_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_probe).count()
    }

    pub fn annotator_manifest(&self) -> AnnotatorManifest {
        AnnotatorManifest {
            task: self.task.clone(),
            items: self
                .items
                .iter()
                .map(|i| AnnotatorItem {
                    id: i.id.clone(),
                    file: i.file.clone(),
                })
                .collect(),
        }
    }

    /// Longest run of consecutive non-probe items, including leading and
    /// trailing runs.
    pub fn longest_gap(&self) -> usize {
        let mut longest = 0;
        let mut run = 0;
        for item in &self.items {
            run = if item.is_probe { 0 } else { run + 1 };
            longest = longest.max(run);
        }
        longest
    }

    /// Gap bound that keeps probes spread out: `⌈2 / probe_fraction⌉`.
    pub fn max_gap(&self) -> usize {
        max_gap(self.probe_fraction)
    }

    pub fn probe_class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for class in self.items.iter().filter_map(|i| i.class.filter(|_| i.is_probe)) {
            counts[class.index()] += 1;
        }
        counts
    }
}

fn max_gap(fraction: f64) -> usize {
    (2.0 / fraction).ceil() as usize
}

/// `½ Σ |counts/total − prior|`.
pub fn total_variation(counts: &[usize], prior: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    0.5 * counts
        .iter()
        .zip(prior)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

/// Probes needed so they make up `fraction` of `real + probes`; at least one.
fn probe_count(real: usize, fraction: f64) -> usize {
    ((fraction * real as f64 / (1.0 - fraction)).round() as usize).max(1)
}

/// Largest-remainder apportionment of `n` across `prior`.
fn apportion(n: usize, prior: &[f64; NUM_CLASSES]) -> [usize; NUM_CLASSES] {
    let quotas: Vec<f64> = prior.iter().map(|p| p * n as f64).collect();
    let mut counts = [0usize; NUM_CLASSES];
    for (c, q) in counts.iter_mut().zip(&quotas) {
        *c = q.floor() as usize;
    }
    let mut order: Vec<usize> = (0..NUM_CLASSES).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// Interleave `real_items` with probes drawn from `probe_pool` so probes
/// make up `probe_fraction` of the task, are spread evenly, and follow the
/// configured class prior.
pub fn plan_injection(
    task: impl Into<String>,
    real_items: &[ManifestEntry],
    probe_pool: &[ManifestEntry],
    config: &InjectionConfig,
    seed: u64,
) -> Result<InjectionPlan, InjectError> {
    let f = config.probe_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(InjectError::Validation(format!(
            "probe fraction {f} must lie in (0, 1)"
        )));
    }
    let prior_sum: f64 = config.prior.iter().sum();
    if config.prior.iter().any(|&p| !(p >= 0.0)) || (prior_sum - 1.0).abs() > 1e-9 {
        return Err(InjectError::Validation(
            "class prior must be non-negative and sum to 1".into(),
        ));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = real_items
        .iter()
        .chain(probe_pool)
        .find(|e| !seen.insert(e.id.as_str()))
    {
        return Err(InjectError::Validation(format!("item {:?} appears twice", dup.id)));
    }
    if let Some(bad) = probe_pool.iter().find(|e| e.class.is_none()) {
        return Err(InjectError::Validation(format!(
            "probe {:?} has no class label",
            bad.id
        )));
    }

    let n_probes = probe_count(real_items.len(), f);
    if probe_pool.len() < n_probes {
        return Err(InjectError::Validation(format!(
            "probe pool holds {} images, {n_probes} needed",
            probe_pool.len()
        )));
    }

    let mut by_class: Vec<Vec<&ManifestEntry>> = vec![Vec::new(); NUM_CLASSES];
    for e in probe_pool {
        by_class[e.class.expect("checked").index()].push(e);
    }
    for pool in &mut by_class {
        pool.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let counts = allocate(n_probes, &config.prior, &by_class, config.tv_budget)?;

    let mut rng = rng::seeded(seed);
    let mut probes: Vec<&ManifestEntry> = Vec::with_capacity(n_probes);
    for (pool, &want) in by_class.iter_mut().zip(&counts) {
        pool.shuffle(&mut rng);
        probes.extend(&pool[..want]);
    }
    probes.shuffle(&mut rng);
    let mut reals: Vec<&ManifestEntry> = real_items.iter().collect();
    reals.shuffle(&mut rng);

    // One probe per stratum, never further than the gap bound from the last.
    let total = reals.len() + n_probes;
    let limit = max_gap(f);
    let mut positions = Vec::with_capacity(n_probes);
    let mut next_free = 0;
    for k in 0..n_probes {
        let lo = (k * total / n_probes).max(next_free);
        let hi = ((k + 1) * total / n_probes).min(next_free + limit + 1);
        let pos = if hi > lo { rng.random_range(lo..hi) } else { lo };
        positions.push(pos);
        next_free = pos + 1;
    }

    let mut items = Vec::with_capacity(total);
    let (mut probes, mut reals) = (probes.into_iter(), reals.into_iter());
    let mut positions = positions.into_iter().peekable();
    for i in 0..total {
        let item = if positions.peek() == Some(&i) {
            positions.next();
            let p = probes.next().expect("one probe per position");
            PlanItem {
                id: p.id.clone(),
                file: p.file.clone(),
                is_probe: true,
                class: p.class,
            }
        } else {
            let r = reals.next().expect("remaining slots are real");
            PlanItem {
                id: r.id.clone(),
                file: r.file.clone(),
                is_probe: false,
                class: None,
            }
        };
        items.push(item);
    }

    Ok(InjectionPlan {
        task: task.into(),
        items,
        probe_fraction: f,
        seed,
    })
}

/// Ideal apportionment, with any class the pool cannot cover topped up from
/// classes that have spare images, as long as the mix stays within budget.
fn allocate(
    n: usize,
    prior: &[f64; NUM_CLASSES],
    pools: &[Vec<&ManifestEntry>],
    budget: f64,
) -> Result<[usize; NUM_CLASSES], InjectError> {
    let mut counts = apportion(n, prior);
    let mut deficient = Vec::new();
    let mut missing = 0;
    for (i, c) in counts.iter_mut().enumerate() {
        if *c > pools[i].len() {
            missing += *c - pools[i].len();
            deficient.push(format!("{}: need {}, have {}", CellClass::ALL[i], *c, pools[i].len()));
            *c = pools[i].len();
        }
    }
    while missing > 0 {
        // Give the next probe to the class furthest below its quota.
        let best = (0..NUM_CLASSES)
            .filter(|&i| counts[i] < pools[i].len())
            .max_by(|&a, &b| {
                let gap = |i: usize| prior[i] * n as f64 - counts[i] as f64;
                gap(a).total_cmp(&gap(b)).then(b.cmp(&a))
            })
            .expect("pool has at least n images");
        counts[best] += 1;
        missing -= 1;
    }
    // Small tasks cannot match a skewed prior with whole probes at all; the
    // budget then applies on top of the best integer apportionment.
    let floor = total_variation(&apportion(n, prior), prior);
    let tv = total_variation(&counts, prior);
    if tv > budget.max(floor) + 1e-12 {
        return Err(InjectError::PriorMismatch(format!(
            "total variation {tv:.3} exceeds {budget} ({})",
            deficient.join("; ")
        )));
    }
    Ok(counts)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::catalog::Provenance;

    fn entry(id: String, class: Option<CellClass>, provenance: Provenance) -> ManifestEntry {
        ManifestEntry {
            file: format!("{id}.ppm"),
            id,
            class,
            provenance,
            split: None,
        }
    }

    pub(crate) fn reals(n: usize) -> Vec<ManifestEntry> {
        (0..n)
            .map(|i| entry(format!("real-{i:04}"), None, Provenance::Real))
            .collect()
    }

    pub(crate) fn pool(per_class: usize) -> Vec<ManifestEntry> {
        CellClass::ALL
            .iter()
            .flat_map(|&c| (0..per_class).map(move |i| entry(format!("probe-{c}-{i:04}"), Some(c), Provenance::Dm)))
            .collect()
    }

    #[test]
    fn half_fraction_doubles_the_task() {
        let plan = plan_injection("t", &reals(10), &pool(10), &InjectionConfig::default(), 1).unwrap();
        assert_eq!(plan.items.len(), 20);
        assert_eq!(plan.probe_count(), 10);
        assert!(plan.longest_gap() <= 4);
    }

    #[test]
    fn tiny_fraction_keeps_one_probe() {
        let cfg = InjectionConfig {
            probe_fraction: 0.001,
            ..Default::default()
        };
        let plan = plan_injection("t", &reals(10), &pool(2), &cfg, 1).unwrap();
        assert_eq!(plan.probe_count(), 1);
    }

    #[test]
    fn large_plan_is_reproducible_and_dispersed() {
        let a = plan_injection("t", &reals(500), &pool(400), &InjectionConfig::default(), 9).unwrap();
        let b = plan_injection("t", &reals(500), &pool(400), &InjectionConfig::default(), 9).unwrap();
        assert_eq!(a.items.len(), 1000);
        assert_eq!(a, b);
        assert!(a.longest_gap() <= a.max_gap());
        let tv = total_variation(&a.probe_class_counts(), &CellClass::reference_prior());
        assert!(tv < 0.01, "{tv}");
    }

    #[test]
    fn exhausted_pool_is_topped_up_or_rejected() {
        // No lymphocytes at all: over half the prior mass is missing.
        let no_lymph: Vec<_> = pool(50)
            .into_iter()
            .filter(|e| e.class != Some(CellClass::Lymphocyte))
            .collect();
        let err = plan_injection("t", &reals(40), &no_lymph, &InjectionConfig::default(), 0).unwrap_err();
        assert!(
            matches!(&err, InjectError::PriorMismatch(m) if m.contains("lymphocyte")),
            "{err}"
        );
        // Only a couple of mast cells short: topping up stays within budget.
        let mut few_mast: Vec<_> = pool(60)
            .into_iter()
            .filter(|e| e.class != Some(CellClass::Mast))
            .collect();
        few_mast.extend(pool(1).into_iter().filter(|e| e.class == Some(CellClass::Mast)));
        let plan = plan_injection("t", &reals(100), &few_mast, &InjectionConfig::default(), 0).unwrap();
        assert_eq!(plan.probe_count(), 100);
    }

    #[test]
    fn small_pool_and_bad_input() {
        let err = plan_injection("t", &reals(100), &pool(1), &InjectionConfig::default(), 0);
        assert!(matches!(err, Err(InjectError::Validation(_))));
        let mut unlabeled = pool(10);
        unlabeled[0].class = None;
        assert!(plan_injection("t", &reals(4), &unlabeled, &InjectionConfig::default(), 0).is_err());
        let cfg = InjectionConfig {
            probe_fraction: 1.0,
            ..Default::default()
        };
        assert!(plan_injection("t", &reals(4), &pool(10), &cfg, 0).is_err());
    }

    #[test]
    fn annotator_manifest_hides_ground_truth() {
        let plan = plan_injection("t", &reals(10), &pool(10), &InjectionConfig::default(), 3).unwrap();
        let json = serde_json::to_value(plan.annotator_manifest()).unwrap();
        for item in json["items"].as_array().unwrap() {
            let keys: Vec<&String> = item.as_object().unwrap().keys().collect();
            assert_eq!(keys, ["file", "id"]);
        }
    }

    proptest::proptest! {
        #[test]
        fn fraction_and_dispersal_hold(real in 1usize..300, f in 0.05f64..0.9, seed: u64) {
            let plan = plan_injection("t", &reals(real), &pool(700), &InjectionConfig {
                probe_fraction: f,
                tv_budget: 1.0,
                ..Default::default()
            }, seed).unwrap();
            let n = plan.items.len() as f64;
            proptest::prop_assert!((plan.probe_count() as f64 - f * n).abs() <= 1.0);
            proptest::prop_assert!(plan.longest_gap() <= plan.max_gap());
            proptest::prop_assert_eq!(plan.items.len() - plan.probe_count(), real);
        }
    }

    #[test]
    fn apportion_sums_to_n() {
        let prior = CellClass::reference_prior();
        for n in 1..200 {
            assert_eq!(apportion(n, &prior).iter().sum::<usize>(), n);
        }
    }
}
