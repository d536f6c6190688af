use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Answer, StudyError, StudyPlan, TrialKind};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Created,
    InProgress,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Response {
    pub trial: String,
    pub answer: Answer,
    /// Milliseconds since the Unix epoch, as supplied by the caller.
    pub timestamp: u64,
}

/// What a participant is shown for one trial: ids only, no ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialView {
    pub trial: String,
    pub kind: TrialKind,
    pub stimuli: Vec<String>,
    pub answered: usize,
    pub total: usize,
}

/// One participant's pass through a plan. The presentation order is fixed
/// at creation from `seed`; pairs always precede singles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub study: String,
    pub participant: String,
    #[serde(default)]
    pub background: Option<String>,
    pub order: Vec<String>,
    pub responses: Vec<Response>,
    pub state: SessionState,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        plan: &StudyPlan,
        participant: impl Into<String>,
        background: Option<String>,
        seed: u64,
    ) -> Self {
        let mut rng = rng::seeded(seed);
        let mut pairs: Vec<String> = plan.pair_trials.iter().map(|t| t.id.clone()).collect();
        let mut singles: Vec<String> = plan.single_trials.iter().map(|t| t.id.clone()).collect();
        pairs.shuffle(&mut rng);
        singles.shuffle(&mut rng);
        pairs.extend(singles);
        Self {
            id: id.into(),
            study: plan.id.clone(),
            participant: participant.into(),
            background,
            order: pairs,
            responses: Vec::new(),
            state: SessionState::Created,
        }
    }

    pub fn start(&mut self) -> Result<(), StudyError> {
        match self.state {
            SessionState::Created => {
                self.state = if self.order.is_empty() {
                    SessionState::Completed
                } else {
                    SessionState::InProgress
                };
                Ok(())
            }
            SessionState::InProgress => Ok(()),
            SessionState::Completed => Err(StudyError::Conflict(format!("session {} is completed", self.id))),
        }
    }

    pub fn is_answered(&self, trial: &str) -> bool {
        self.responses.iter().any(|r| r.trial == trial)
    }

    /// First unanswered trial in presentation order.
    pub fn next_trial(&self, plan: &StudyPlan) -> Option<TrialView> {
        if self.state != SessionState::InProgress {
            return None;
        }
        let id = self.order.iter().find(|id| !self.is_answered(id))?;
        let trial = plan.trial(id)?;
        Some(TrialView {
            trial: id.clone(),
            kind: trial.kind(),
            stimuli: trial.stimuli().into_iter().map(str::to_string).collect(),
            answered: self.responses.len(),
            total: self.order.len(),
        })
    }

    pub fn record_response(
        &mut self,
        plan: &StudyPlan,
        trial_id: &str,
        answer: Answer,
        timestamp: u64,
    ) -> Result<&Response, StudyError> {
        match self.state {
            SessionState::InProgress => {}
            SessionState::Created => {
                return Err(StudyError::Conflict(format!("session {} has not started", self.id)));
            }
            SessionState::Completed => {
                return Err(StudyError::Conflict(format!("session {} is completed", self.id)));
            }
        }
        if plan.id != self.study {
            return Err(StudyError::Validation(format!(
                "session {} belongs to study {}, not {}",
                self.id, self.study, plan.id
            )));
        }
        let trial = plan
            .trial(trial_id)
            .ok_or_else(|| StudyError::NotFound(format!("trial {trial_id:?} in study {}", plan.id)))?;
        if !answer.fits(trial.kind()) {
            return Err(StudyError::AnswerType(format!(
                "{} trial {trial_id} cannot be answered {answer:?}",
                trial.kind().name()
            )));
        }
        if self.is_answered(trial_id) {
            return Err(StudyError::Conflict(format!("trial {trial_id} already answered")));
        }
        self.responses.push(Response {
            trial: trial_id.to_string(),
            answer,
            timestamp,
        });
        if self.responses.len() == self.order.len() {
            self.state = SessionState::Completed;
        }
        Ok(self.responses.last().expect("just pushed"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::build_study;
    use crate::study::plan::tests::catalog;

    fn started(plan: &StudyPlan) -> Session {
        let mut s = Session::new("s1", plan, "p1", Some("other".into()), 5);
        s.start().unwrap();
        s
    }

    #[test]
    fn order_puts_pairs_first_and_varies() {
        let plan = build_study(&catalog(30, 20, 20), 1).unwrap();
        let a = Session::new("a", &plan, "p", None, 1);
        let b = Session::new("b", &plan, "p", None, 2);
        assert_eq!(a.order.len(), 50);
        assert!(a.order[..20].iter().all(|t| t.starts_with("pair-")));
        assert!(a.order[20..].iter().all(|t| t.starts_with("single-")));
        assert_ne!(a.order, b.order);
    }

    #[test]
    fn answering_everything_completes() {
        let plan = build_study(&catalog(30, 20, 20), 1).unwrap();
        let mut s = started(&plan);
        let mut n = 0;
        while let Some(view) = s.next_trial(&plan) {
            assert_eq!(view.answered, n);
            let answer = match view.kind {
                TrialKind::Pair => Answer::Left,
                TrialKind::Single => Answer::Fake,
            };
            s.record_response(&plan, &view.trial, answer, 1000 + n as u64).unwrap();
            n += 1;
        }
        assert_eq!(n, 50);
        assert_eq!(s.state, SessionState::Completed);
        assert!(matches!(
            s.record_response(&plan, "pair-01", Answer::Left, 0),
            Err(StudyError::Conflict(_))
        ));
    }

    #[test]
    fn response_errors() {
        let plan = build_study(&catalog(30, 20, 20), 1).unwrap();
        let mut fresh = Session::new("s0", &plan, "p", None, 0);
        assert!(matches!(
            fresh.record_response(&plan, "pair-01", Answer::Left, 0),
            Err(StudyError::Conflict(_))
        ));
        let mut s = started(&plan);
        s.record_response(&plan, "pair-03", Answer::Right, 1).unwrap();
        assert!(matches!(
            s.record_response(&plan, "pair-03", Answer::Left, 2),
            Err(StudyError::Conflict(_))
        ));
        assert!(matches!(
            s.record_response(&plan, "pair-99", Answer::Left, 2),
            Err(StudyError::NotFound(_))
        ));
        assert!(matches!(
            s.record_response(&plan, "pair-04", Answer::Real, 2),
            Err(StudyError::AnswerType(_))
        ));
        assert!(matches!(
            s.record_response(&plan, "single-04", Answer::Left, 2),
            Err(StudyError::AnswerType(_))
        ));
        assert_eq!(s.responses.len(), 1);
        assert_eq!(s.state, SessionState::InProgress);
    }
}
