use std::io;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Answer, Session, SessionState, StudyError, StudyPlan, TrialKind};
use crate::catalog::Generator;

pub const CSV_HEADER: &str = "session,participant,trial,kind,generator,truth,answer,correct,timestamp";

/// One answered trial, flattened with its ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub session: String,
    pub participant: String,
    pub trial: String,
    pub kind: TrialKind,
    /// `none` for real single stimuli.
    #[serde(with = "generator_column")]
    pub generator: Option<Generator>,
    pub truth: Answer,
    pub answer: Answer,
    pub correct: bool,
    pub timestamp: u64,
}

mod generator_column {
    use super::*;

    pub fn serialize<S: Serializer>(g: &Option<Generator>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(g.map_or("none", Generator::name))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Generator>, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "none" | "" => Ok(None),
            other => other.parse().map(Some).map_err(serde::de::Error::custom),
        }
    }
}

/// Rows for every completed session, in the given session order and each
/// session's answer order.
pub fn export_responses(plan: &StudyPlan, sessions: &[Session]) -> Result<Vec<ResponseRow>, StudyError> {
    let mut rows = Vec::new();
    for session in sessions.iter().filter(|s| s.state == SessionState::Completed) {
        if session.study != plan.id {
            return Err(StudyError::Validation(format!(
                "session {} belongs to study {}",
                session.id, session.study
            )));
        }
        for r in &session.responses {
            let trial = plan
                .trial(&r.trial)
                .ok_or_else(|| StudyError::NotFound(format!("trial {:?}", r.trial)))?;
            rows.push(ResponseRow {
                session: session.id.clone(),
                participant: session.participant.clone(),
                trial: r.trial.clone(),
                kind: trial.kind(),
                generator: trial.generator(),
                truth: trial.truth(),
                answer: r.answer,
                correct: r.answer == trial.truth(),
                timestamp: r.timestamp,
            });
        }
    }
    if rows.is_empty() {
        return Err(StudyError::EmptyExport);
    }
    Ok(rows)
}

pub fn write_responses_csv<W: io::Write>(rows: &[ResponseRow], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn read_responses_csv<R: io::Read>(input: R) -> Result<Vec<ResponseRow>, StudyError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| StudyError::Validation(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(StudyError::Validation(format!(
            "unexpected response header {:?}",
            header.join(",")
        )));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let row: ResponseRow = row.map_err(|e| StudyError::Validation(format!("row {}: {e}", i + 1)))?;
            if !row.answer.fits(row.kind) || !row.truth.fits(row.kind) {
                return Err(StudyError::AnswerType(format!(
                    "row {}: {} answer mismatch",
                    i + 1,
                    row.kind.name()
                )));
            }
            if row.correct != (row.answer == row.truth) {
                return Err(StudyError::Validation(format!(
                    "row {}: inconsistent correct flag",
                    i + 1
                )));
            }
            if row.kind == TrialKind::Single && (row.truth == Answer::Fake) != row.generator.is_some() {
                return Err(StudyError::Validation(format!(
                    "row {}: truth and generator disagree",
                    i + 1
                )));
            }
            if row.kind == TrialKind::Pair && row.generator.is_none() {
                return Err(StudyError::Validation(format!(
                    "row {}: pair trial without generator",
                    i + 1
                )));
            }
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::study::build_study;
    use crate::study::plan::tests::catalog;

    fn complete(plan: &StudyPlan, id: &str, seed: u64) -> Session {
        let mut s = Session::new(id, plan, format!("participant-{id}"), None, seed);
        s.start().unwrap();
        while let Some(v) = s.next_trial(plan) {
            let a = match v.kind {
                TrialKind::Pair => Answer::Right,
                TrialKind::Single => Answer::Real,
            };
            s.record_response(plan, &v.trial, a, 0).unwrap();
        }
        s
    }

    #[test]
    fn one_row_per_answer() {
        let plan = build_study(&catalog(30, 20, 20), 2).unwrap();
        let sessions: Vec<Session> = (0..49).map(|i| complete(&plan, &format!("s{i}"), i)).collect();
        assert_eq!(export_responses(&plan, &sessions[..1]).unwrap().len(), 50);
        let rows = export_responses(&plan, &sessions).unwrap();
        assert_eq!(rows.len(), 2450);
        for row in &rows {
            let trial = plan.trial(&row.trial).unwrap();
            assert_eq!(row.correct, row.answer == trial.truth());
        }
    }

    #[test]
    fn incomplete_sessions_are_skipped() {
        let plan = build_study(&catalog(30, 20, 20), 2).unwrap();
        let mut s = Session::new("s", &plan, "p", None, 0);
        s.start().unwrap();
        s.record_response(&plan, "pair-01", Answer::Left, 0).unwrap();
        assert_eq!(export_responses(&plan, &[s]), Err(StudyError::EmptyExport));
    }

    #[test]
    fn csv_round_trip() {
        let plan = build_study(&catalog(30, 20, 20), 2).unwrap();
        let rows = export_responses(&plan, &[complete(&plan, "s", 1)]).unwrap();
        let mut buf = Vec::new();
        write_responses_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
        assert!(text.contains(",none,real,real,true,"));
        assert_eq!(read_responses_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn csv_rejects_inconsistent_rows() {
        let bad = format!("{CSV_HEADER}\ns,p,single-01,single,none,fake,fake,true,0\n");
        assert!(read_responses_csv(bad.as_bytes()).is_err());
        let bad = format!("{CSV_HEADER}\ns,p,pair-01,pair,dm,left,real,false,0\n");
        assert!(matches!(
            read_responses_csv(bad.as_bytes()),
            Err(StudyError::AnswerType(_))
        ));
    }
}
