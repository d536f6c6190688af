//! Unobtrusive quality control for annotators: synthetic images with known
//! class ("probes") are interleaved with real unlabeled items, and only the
//! probes are scored.

mod plan;
mod score;

pub use plan::{
    plan_injection, total_variation, AnnotatorItem, AnnotatorManifest, InjectionConfig, InjectionPlan, PlanItem,
};
pub use score::{
    leaderboard, score_annotation, wilson_lower_bound, Annotation, AnnotatorScore, ScoreDelta, ScoringConstants,
    WILSON_Z95,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("cannot match class prior: {0}")]
    PriorMismatch(String),
}
