use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{InjectError, InjectionPlan};
use crate::catalog::CellClass;

/// Two-sided 95% normal quantile.
pub const WILSON_Z95: f64 = 1.959_963_984_540_054;

/// Lower end of the Wilson score interval for `successes / trials`; zero
/// when nothing has been observed.
pub fn wilson_lower_bound(successes: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringConstants {
    pub base_points: u64,
    pub streak_step: u64,
    pub streak_cap: u64,
    pub z: f64,
}

impl Default for ScoringConstants {
    fn default() -> Self {
        Self {
            base_points: 100,
            streak_step: 10,
            streak_cap: 50,
            z: WILSON_Z95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub item: String,
    pub class: CellClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorScore {
    pub annotator: String,
    pub probes_seen: u64,
    pub probes_correct: u64,
    pub reliability: f64,
    pub high_score: u64,
    pub streak: u64,
}

impl AnnotatorScore {
    pub fn new(annotator: impl Into<String>) -> Self {
        Self {
            annotator: annotator.into(),
            probes_seen: 0,
            probes_correct: 0,
            reliability: 0.0,
            high_score: 0,
            streak: 0,
        }
    }

    pub fn apply(&mut self, delta: &ScoreDelta, constants: &ScoringConstants) {
        self.probes_seen += delta.probes_seen;
        self.probes_correct += delta.probes_correct;
        self.high_score += delta.points;
        self.streak = delta.streak;
        self.reliability = wilson_lower_bound(self.probes_correct, self.probes_seen, constants.z);
    }
}

/// What one batch of annotations adds to an annotator's standing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreDelta {
    pub points: u64,
    pub probes_seen: u64,
    pub probes_correct: u64,
    /// Streak after this batch.
    pub streak: u64,
}

/// Score the probe items of `plan`, in plan order, continuing `current`'s
/// streak. Correct probes earn the base plus `min(step · streak, cap)`;
/// a wrong one resets the streak. Non-probe items are accepted unscored.
pub fn score_annotation(
    plan: &InjectionPlan,
    annotations: &[Annotation],
    current: &AnnotatorScore,
    constants: &ScoringConstants,
) -> Result<ScoreDelta, InjectError> {
    let known: HashSet<&str> = plan.items.iter().map(|i| i.id.as_str()).collect();
    let mut given: HashMap<&str, CellClass> = HashMap::with_capacity(annotations.len());
    for a in annotations {
        if !known.contains(a.item.as_str()) {
            return Err(InjectError::Validation(format!(
                "item {:?} is not part of task {}",
                a.item, plan.task
            )));
        }
        if given.insert(a.item.as_str(), a.class).is_some() {
            return Err(InjectError::Validation(format!("item {:?} annotated twice", a.item)));
        }
    }

    let mut delta = ScoreDelta {
        points: 0,
        probes_seen: 0,
        probes_correct: 0,
        streak: current.streak,
    };
    for item in plan.items.iter().filter(|i| i.is_probe) {
        let Some(&answer) = given.get(item.id.as_str()) else {
            continue;
        };
        delta.probes_seen += 1;
        if Some(answer) == item.class {
            delta.probes_correct += 1;
            delta.points += constants.base_points + (constants.streak_step * delta.streak).min(constants.streak_cap);
            delta.streak += 1;
        } else {
            delta.streak = 0;
        }
    }
    Ok(delta)
}

/// Highest score first; ties by reliability, then annotator id.
pub fn leaderboard(scores: &[AnnotatorScore]) -> Vec<AnnotatorScore> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        b.high_score
            .cmp(&a.high_score)
            .then(b.reliability.total_cmp(&a.reliability))
            .then(a.annotator.cmp(&b.annotator))
    });
    ranked
}
