use axum::body::Body;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State as AxState};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cellprobe::catalog::ManifestEntry;
use cellprobe::inject::{leaderboard, plan_injection, score_annotation, Annotation, AnnotatorScore, InjectionConfig};
use cellprobe::metrics::study_report;
use cellprobe::rng;
use cellprobe::study::{build_study, export_responses, write_responses_csv, Answer, Session, StudyError};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Deserialize;
use serde_json::json;

use crate::error::ApiError;
use crate::state::{image_url, session_ack, Event, ImageRef, StudyRecord, TaskRecord};
use crate::{App, StoredReply};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

pub fn router(app: App) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/studies", post(create_study))
        .route("/studies/{id}/sessions", post(start_session))
        .route("/studies/{id}/export", get(export))
        .route("/studies/{id}/report", get(report))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/next", get(next_trial))
        .route("/sessions/{id}/responses", post(submit_response))
        .route("/tasks", post(issue_task))
        .route("/tasks/{id}/annotations", post(submit_annotations))
        .route("/leaderboard", get(get_leaderboard))
        .route("/images/{handle}", get(image))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(app)
}

fn token(headers: &HeaderMap) -> Option<String> {
    headers
        .get(IDEMPOTENCY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::to_string)
}

fn reply(r: StoredReply) -> Response {
    let status = StatusCode::from_u16(r.status).unwrap_or(StatusCode::OK);
    (status, Json(r.body)).into_response()
}

fn handle(rng: &mut rng::Rng, prefix: &str) -> String {
    format!("{prefix}-{:016x}", rng.random::<u64>())
}

async fn health(AxState(app): AxState<App>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "events": app.read(|s| s.last_seq) }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateStudy {
    seed: u64,
}

async fn create_study(
    AxState(app): AxState<App>,
    headers: HeaderMap,
    body: Result<Json<CreateStudy>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let catalog = app.catalog().clone();
    let r = app.commit(token(&headers), |state, seq| {
        let mut plan = build_study(&catalog.entries, body.seed)?;
        plan.id = format!("study-{:04}", state.studies.len() + 1);
        let mut rng = rng::stream(seq, 0);
        let images = plan
            .stimuli()
            .into_iter()
            .map(|id| {
                let file = catalog.file_of(id).expect("stimuli come from the catalog").to_string();
                (
                    id.to_string(),
                    ImageRef {
                        handle: handle(&mut rng, "img"),
                        file,
                    },
                )
            })
            .collect();
        Ok(Event::StudyCreated {
            study: StudyRecord { plan, images },
        })
    })?;
    Ok(reply(r))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StartSession {
    participant: String,
    #[serde(default)]
    background: Option<String>,
}

async fn start_session(
    AxState(app): AxState<App>,
    Path(study): Path<String>,
    headers: HeaderMap,
    body: Result<Json<StartSession>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    if body.participant.trim().is_empty() {
        return Err(ApiError::validation("participant pseudonym must not be empty"));
    }
    let r = app.commit(token(&headers), |state, seq| {
        let plan = &state.study(&study)?.plan;
        let id = format!("session-{:04}", state.sessions.len() + 1);
        let seed = plan.seed ^ seq.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Ok(Event::SessionStarted {
            session: Session::new(id, plan, body.participant, body.background, seed),
        })
    })?;
    Ok(reply(r))
}

async fn session_status(AxState(app): AxState<App>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let body = app.read(|s| s.session(&id).map(session_ack))?;
    Ok(Json(body).into_response())
}

async fn next_trial(AxState(app): AxState<App>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let body = app.read(|state| {
        let session = state.session(&id)?;
        let study = state.study(&session.study)?;
        let mut body = session_ack(session);
        body["trial"] = match session.next_trial(&study.plan) {
            Some(view) => {
                let images: Vec<String> = view
                    .stimuli
                    .iter()
                    .map(|s| image_url(&study.images[s].handle))
                    .collect();
                json!({ "id": view.trial, "kind": view.kind, "images": images })
            }
            None => serde_json::Value::Null,
        };
        Ok::<_, ApiError>(body)
    })?;
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitResponse {
    trial: String,
    answer: Answer,
}

async fn submit_response(
    AxState(app): AxState<App>,
    Path(session): Path<String>,
    headers: HeaderMap,
    body: Result<Json<SubmitResponse>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let r = app.commit(token(&headers), |state, _| {
        state.session(&session)?;
        Ok(Event::ResponseRecorded {
            session,
            trial: body.trial,
            answer: body.answer,
        })
    })?;
    Ok(reply(r))
}

async fn export(AxState(app): AxState<App>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (rows, warning) = app.read(|state| {
        let plan = &state.study(&id)?.plan;
        let sessions: Vec<Session> = state.sessions_of(&id).cloned().collect();
        match export_responses(plan, &sessions) {
            Ok(rows) => Ok((rows, None)),
            Err(StudyError::EmptyExport) => Ok((Vec::new(), Some("no completed sessions"))),
            Err(e) => Err(ApiError::from(e)),
        }
    })?;
    let mut csv = Vec::new();
    write_responses_csv(&rows, &mut csv).map_err(|e| ApiError::internal(e.to_string()))?;
    let mut response = ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response();
    if let Some(w) = warning {
        response
            .headers_mut()
            .insert("x-cellprobe-warning", w.parse().expect("ascii"));
    }
    Ok(response)
}

#[derive(Deserialize)]
struct ReportQuery {
    #[serde(default = "yes")]
    pairs: bool,
}

fn yes() -> bool {
    true
}

async fn report(
    AxState(app): AxState<App>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    let json = app.read(|state| {
        let plan = &state.study(&id)?.plan;
        let sessions: Vec<Session> = state.sessions_of(&id).cloned().collect();
        let rows = export_responses(plan, &sessions)?;
        Ok::<_, ApiError>(study_report(&rows, q.pairs)?.to_json())
    })?;
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct IssueTask {
    annotator: String,
    #[serde(default)]
    probe_fraction: Option<f64>,
    #[serde(default)]
    real_items: Option<usize>,
}

async fn issue_task(
    AxState(app): AxState<App>,
    headers: HeaderMap,
    body: Result<Json<IssueTask>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    if body.annotator.trim().is_empty() {
        return Err(ApiError::validation("annotator id must not be empty"));
    }
    let catalog = app.catalog().clone();
    let defaults = app.config().tasks.clone();
    let r = app.commit(token(&headers), |state, seq| {
        let task = format!("task-{:04}", state.tasks.len() + 1);
        let want = body.real_items.unwrap_or(defaults.real_items);
        let mut reals: Vec<&ManifestEntry> = catalog.entries.iter().filter(|e| e.provenance.is_real()).collect();
        if reals.len() < want {
            return Err(ApiError::validation(format!(
                "catalog holds {} real images, {want} requested",
                reals.len()
            )));
        }
        reals.sort_by(|a, b| a.id.cmp(&b.id));
        let mut rng = rng::stream(seq, 1);
        reals.shuffle(&mut rng);
        let reals: Vec<ManifestEntry> = reals.into_iter().take(want).cloned().collect();
        let pool: Vec<ManifestEntry> = catalog
            .entries
            .iter()
            .filter(|e| !e.provenance.is_real() && e.class.is_some())
            .cloned()
            .collect();
        let config = InjectionConfig {
            probe_fraction: body.probe_fraction.unwrap_or(defaults.probe_fraction),
            tv_budget: defaults.tv_budget,
            ..InjectionConfig::default()
        };
        let mut plan = plan_injection(task.clone(), &reals, &pool, &config, seq)?;
        for item in &mut plan.items {
            item.id = handle(&mut rng, "item");
        }
        Ok(Event::TaskIssued {
            task,
            record: TaskRecord {
                annotator: body.annotator,
                plan,
                scored: None,
            },
        })
    })?;
    Ok(reply(r))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitAnnotations {
    annotations: Vec<Annotation>,
}

async fn submit_annotations(
    AxState(app): AxState<App>,
    Path(task): Path<String>,
    headers: HeaderMap,
    body: Result<Json<SubmitAnnotations>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let r = app.commit(token(&headers), |state, _| {
        let record = state.task(&task)?;
        if record.scored.is_some() {
            return Err(ApiError::conflict(format!("task {task} was already scored")));
        }
        let current = state
            .scores
            .get(&record.annotator)
            .cloned()
            .unwrap_or_else(|| AnnotatorScore::new(record.annotator.clone()));
        let delta = score_annotation(&record.plan, &body.annotations, &current, &state.scoring)?;
        Ok(Event::AnnotationScored {
            task,
            annotations: body.annotations,
            delta,
        })
    })?;
    Ok(reply(r))
}

async fn get_leaderboard(AxState(app): AxState<App>) -> Json<Vec<AnnotatorScore>> {
    let scores: Vec<AnnotatorScore> = app.read(|s| s.scores.values().cloned().collect());
    Json(leaderboard(&scores))
}

async fn image(AxState(app): AxState<App>, Path(handle): Path<String>) -> Result<Response, ApiError> {
    let file = app
        .read(|s| s.image_file(&handle).map(str::to_string))
        .ok_or_else(|| ApiError::not_found(format!("image {handle:?}")))?;
    let bytes = tokio::fs::read(app.catalog().dir.join(&file))
        .await
        .map_err(|e| ApiError::internal(format!("reading image: {e}")))?;
    Ok(([(header::CONTENT_TYPE, "image/x-portable-pixmap")], Body::from(bytes)).into_response())
}
