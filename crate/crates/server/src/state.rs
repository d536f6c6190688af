//! Pure, replayable service state. Every change arrives as an [`Event`];
//! [`State::validate`] checks it against the current state and
//! [`State::apply`] performs it without failing.

use std::collections::BTreeMap;

use axum::http::StatusCode;
use cellprobe::inject::{Annotation, AnnotatorScore, InjectionPlan, ScoreDelta, ScoringConstants};
use cellprobe::study::{Answer, Session, SessionState, StudyPlan};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub plan: StudyPlan,
    /// Stimulus id → the opaque handle participants see and its file.
    pub images: BTreeMap<String, ImageRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub handle: String,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub annotator: String,
    /// Item ids are opaque handles; `file` is the catalog file behind them.
    pub plan: InjectionPlan,
    #[serde(default)]
    pub scored: Option<ScoreDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    StudyCreated {
        study: StudyRecord,
    },
    SessionStarted {
        session: Session,
    },
    ResponseRecorded {
        session: String,
        trial: String,
        answer: Answer,
    },
    TaskIssued {
        task: String,
        record: TaskRecord,
    },
    AnnotationScored {
        task: String,
        annotations: Vec<Annotation>,
        delta: ScoreDelta,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub seq: u64,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
    /// Client idempotency key, if the request carried one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    #[serde(flatten)]
    pub event: Event,
}

/// A reply remembered for an idempotency key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredReply {
    pub status: u16,
    pub body: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub last_seq: u64,
    pub studies: BTreeMap<String, StudyRecord>,
    pub sessions: BTreeMap<String, Session>,
    pub tasks: BTreeMap<String, TaskRecord>,
    pub scores: BTreeMap<String, AnnotatorScore>,
    pub tokens: BTreeMap<String, StoredReply>,
    pub scoring: ScoringConstants,
}

pub fn image_url(handle: &str) -> String {
    format!("/images/{handle}")
}

impl State {
    pub fn new(scoring: ScoringConstants) -> Self {
        Self {
            scoring,
            ..Self::default()
        }
    }

    pub fn study(&self, id: &str) -> Result<&StudyRecord, ApiError> {
        self.studies
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("study {id:?}")))
    }

    pub fn session(&self, id: &str) -> Result<&Session, ApiError> {
        self.sessions
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("session {id:?}")))
    }

    pub fn task(&self, id: &str) -> Result<&TaskRecord, ApiError> {
        self.tasks
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("task {id:?}")))
    }

    pub fn sessions_of<'a>(&'a self, study: &'a str) -> impl Iterator<Item = &'a Session> + 'a {
        self.sessions.values().filter(move |s| s.study == study)
    }

    /// Catalog file behind an opaque image handle.
    pub fn image_file(&self, handle: &str) -> Option<&str> {
        for study in self.studies.values() {
            if let Some(image) = study.images.values().find(|i| i.handle == handle) {
                return Some(image.file.as_str());
            }
        }
        self.tasks
            .values()
            .flat_map(|t| &t.plan.items)
            .find(|i| i.id == handle)
            .map(|i| i.file.as_str())
    }

    /// Check `rec` could be applied now.
    pub fn validate(&self, rec: &EventRecord) -> Result<(), ApiError> {
        if rec.seq != self.last_seq + 1 {
            return Err(ApiError::internal(format!(
                "event sequence {} does not follow {}",
                rec.seq, self.last_seq
            )));
        }
        match &rec.event {
            Event::StudyCreated { study } => {
                if self.studies.contains_key(&study.plan.id) {
                    return Err(ApiError::conflict(format!("study {} exists", study.plan.id)));
                }
            }
            Event::SessionStarted { session } => {
                self.study(&session.study)?;
                if self.sessions.contains_key(&session.id) {
                    return Err(ApiError::conflict(format!("session {} exists", session.id)));
                }
            }
            Event::ResponseRecorded { session, trial, answer } => {
                let s = self.session(session)?;
                let plan = &self.study(&s.study)?.plan;
                s.clone().record_response(plan, trial, *answer, rec.timestamp)?;
            }
            Event::TaskIssued { task, .. } => {
                if self.tasks.contains_key(task) {
                    return Err(ApiError::conflict(format!("task {task} exists")));
                }
            }
            Event::AnnotationScored { task, .. } => {
                if self.task(task)?.scored.is_some() {
                    return Err(ApiError::conflict(format!("task {task} was already scored")));
                }
            }
        }
        Ok(())
    }

    /// Apply a validated event and return the reply it acknowledges.
    pub fn apply(&mut self, rec: &EventRecord) -> StoredReply {
        self.last_seq = rec.seq;
        let (status, body) = match &rec.event {
            Event::StudyCreated { study } => {
                let plan = &study.plan;
                let body = json!({
                    "study": plan.id,
                    "pair_trials": plan.pair_trials.len(),
                    "single_trials": plan.single_trials.len(),
                });
                self.studies.insert(plan.id.clone(), study.clone());
                (StatusCode::CREATED, body)
            }
            Event::SessionStarted { session } => {
                let mut session = session.clone();
                session.start().expect("validated");
                let body = session_ack(&session);
                self.sessions.insert(session.id.clone(), session);
                (StatusCode::CREATED, body)
            }
            Event::ResponseRecorded { session, trial, answer } => {
                let plan = &self.studies[&self.sessions[session].study].plan;
                let s = self.sessions.get_mut(session).expect("validated");
                s.record_response(plan, trial, *answer, rec.timestamp)
                    .expect("validated");
                let mut body = session_ack(s);
                body["trial"] = json!(trial);
                (StatusCode::OK, body)
            }
            Event::TaskIssued { task, record } => {
                self.scores
                    .entry(record.annotator.clone())
                    .or_insert_with(|| AnnotatorScore::new(record.annotator.clone()));
                let items: Vec<Value> = record
                    .plan
                    .items
                    .iter()
                    .map(|i| json!({ "id": i.id, "image": image_url(&i.id) }))
                    .collect();
                let body = json!({ "task": task, "annotator": record.annotator, "items": items });
                self.tasks.insert(task.clone(), record.clone());
                (StatusCode::CREATED, body)
            }
            Event::AnnotationScored { task, delta, .. } => {
                let record = self.tasks.get_mut(task).expect("validated");
                record.scored = Some(*delta);
                let score = self
                    .scores
                    .entry(record.annotator.clone())
                    .or_insert_with(|| AnnotatorScore::new(record.annotator.clone()));
                score.apply(delta, &self.scoring);
                let body = json!({ "task": task, "annotator": record.annotator, "delta": delta, "score": score });
                (StatusCode::OK, body)
            }
        };
        let reply = StoredReply {
            status: status.as_u16(),
            body,
        };
        if let Some(token) = &rec.token {
            self.tokens.insert(token.clone(), reply.clone());
        }
        reply
    }
}

pub fn session_ack(s: &Session) -> Value {
    json!({
        "session": s.id,
        "study": s.study,
        "answered": s.responses.len(),
        "total": s.order.len(),
        "state": match s.state {
            SessionState::Created => "created",
            SessionState::InProgress => "in_progress",
            SessionState::Completed => "completed",
        },
    })
}
