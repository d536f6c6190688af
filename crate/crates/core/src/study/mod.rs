//! Two-part real-vs-fake study: forced-choice pairs followed by single
//! judgments, per-participant sessions, and the flat response log that
//! [`crate::metrics`] consumes.

mod log;
mod plan;
mod session;

pub use log::{export_responses, read_responses_csv, write_responses_csv, ResponseRow, CSV_HEADER};
pub use plan::{build_study, build_study_with, PairTrial, SingleTrial, StudyComposition, StudyPlan, Trial, TrialKind};
pub use session::{Response, Session, SessionState, TrialView};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StudyError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("wrong answer type: {0}")]
    AnswerType(String),
    #[error("no completed sessions to export")]
    EmptyExport,
}

/// Both a participant's answer and the ground truth it is scored against:
/// pair trials use `left`/`right` (which side is fake), single trials use
/// `real`/`fake`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Left,
    Right,
    Real,
    Fake,
}

impl Answer {
    pub fn name(self) -> &'static str {
        match self {
            Answer::Left => "left",
            Answer::Right => "right",
            Answer::Real => "real",
            Answer::Fake => "fake",
        }
    }

    pub fn fits(self, kind: TrialKind) -> bool {
        match kind {
            TrialKind::Pair => matches!(self, Answer::Left | Answer::Right),
            TrialKind::Single => matches!(self, Answer::Real | Answer::Fake),
        }
    }
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Answer {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(Answer::Left),
            "right" => Ok(Answer::Right),
            "real" => Ok(Answer::Real),
            "fake" => Ok(Answer::Fake),
            other => Err(StudyError::Validation(format!("unknown answer {other:?}"))),
        }
    }
}
