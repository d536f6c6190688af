//! Append-only JSONL event log with periodic JSON snapshots.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::state::{EventRecord, State};

pub const LOG_FILE: &str = "events.jsonl";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("event store I/O: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt event log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("corrupt snapshot: {0}")]
    Snapshot(String),
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: State,
}

pub struct EventStore {
    dir: PathBuf,
    log: File,
    snapshot_every: u64,
    since_snapshot: u64,
}

impl EventStore {
    /// Open (creating if needed) the store in `dir` and rebuild state from
    /// the newest snapshot plus the log tail. `initial` supplies the state
    /// used when no snapshot exists.
    pub fn open(dir: &Path, snapshot_every: u64, initial: State) -> Result<(Self, State), StoreError> {
        fs::create_dir_all(dir)?;
        let state = match fs::read_to_string(dir.join(SNAPSHOT_FILE)) {
            Ok(text) => {
                let snap: Snapshot = serde_json::from_str(&text).map_err(|e| StoreError::Snapshot(e.to_string()))?;
                if snap.state.last_seq != snap.seq {
                    return Err(StoreError::Snapshot("sequence mismatch".into()));
                }
                snap.state
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => initial,
            Err(e) => return Err(e.into()),
        };
        trim_torn_tail(&dir.join(LOG_FILE))?;
        let state = replay_from(&dir.join(LOG_FILE), state)?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG_FILE))?;
        Ok((
            Self {
                dir: dir.to_path_buf(),
                log,
                snapshot_every,
                since_snapshot: 0,
            },
            state,
        ))
    }

    /// Durably append one event.
    pub fn append(&mut self, rec: &EventRecord) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(rec).map_err(io::Error::other)?;
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()?;
        self.since_snapshot += 1;
        Ok(())
    }

    pub fn maybe_snapshot(&mut self, state: &State) -> Result<(), StoreError> {
        if self.snapshot_every == 0 || self.since_snapshot < self.snapshot_every {
            return Ok(());
        }
        self.snapshot(state)
    }

    /// Write a snapshot atomically (temp file + rename).
    pub fn snapshot(&mut self, state: &State) -> Result<(), StoreError> {
        let snap = Snapshot {
            seq: state.last_seq,
            state: state.clone(),
        };
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        let mut f = File::create(&tmp)?;
        serde_json::to_writer(&mut f, &snap).map_err(io::Error::other)?;
        f.sync_all()?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT_FILE))?;
        self.since_snapshot = 0;
        Ok(())
    }
}

/// Cut a partial last line so the next append starts on a fresh line.
fn trim_torn_tail(path: &Path) -> Result<(), StoreError> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(()),
        Err(e) => return Err(e.into()),
    };
    if bytes.last().is_some_and(|&b| b != b'\n') {
        let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        OpenOptions::new().write(true).open(path)?.set_len(keep as u64)?;
    }
    Ok(())
}

/// Every event record in the log, in order.
pub fn read_log(path: &Path) -> Result<Vec<EventRecord>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
    let mut records = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(rec) => records.push(rec),
            // A torn final write from a crash is dropped; it was never acknowledged.
            Err(_) if i + 1 == lines.len() => break,
            Err(e) => {
                return Err(StoreError::Corrupt {
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(records)
}

/// Apply every logged event newer than `state` on top of it.
pub fn replay_from(path: &Path, mut state: State) -> Result<State, StoreError> {
    for (i, rec) in read_log(path)?.into_iter().enumerate() {
        if rec.seq <= state.last_seq {
            continue;
        }
        state.validate(&rec).map_err(|e| StoreError::Corrupt {
            line: i + 1,
            message: e.to_string(),
        })?;
        state.apply(&rec);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use cellprobe::catalog::ManifestEntry;
    use cellprobe::inject::ScoringConstants;
    use cellprobe::study::build_study;
    use cellprobe::{CellClass, Provenance};

    use super::*;
    use crate::state::{Event, StudyRecord};

    fn record(seq: u64) -> EventRecord {
        let entry = |id: String, provenance| ManifestEntry {
            file: format!("{id}.ppm"),
            id,
            class: Some(CellClass::Lymphocyte),
            provenance,
            split: None,
        };
        let catalog: Vec<_> = (0..30)
            .map(|i| entry(format!("real-{i}"), Provenance::Phantom))
            .chain((0..20).map(|i| entry(format!("cgan-{i}"), Provenance::Cgan)))
            .chain((0..20).map(|i| entry(format!("dm-{i}"), Provenance::Dm)))
            .collect();
        EventRecord {
            seq,
            timestamp: 1_700_000_000_000 + seq,
            token: None,
            event: Event::StudyCreated {
                study: StudyRecord {
                    plan: build_study(&catalog, seq).unwrap(),
                    images: BTreeMap::new(),
                },
            },
        }
    }

    fn open(dir: &Path, every: u64) -> (EventStore, State) {
        EventStore::open(dir, every, State::new(ScoringConstants::default())).unwrap()
    }

    #[test]
    fn torn_tail_is_dropped_and_overwritten() {
        let dir = tempfile::tempdir().unwrap();
        let (mut store, mut state) = open(dir.path(), 0);
        for seq in 1..=2 {
            let rec = record(seq);
            state.validate(&rec).unwrap();
            store.append(&rec).unwrap();
            state.apply(&rec);
        }
        drop(store);
        let log = dir.path().join(LOG_FILE);
        let mut f = OpenOptions::new().append(true).open(&log).unwrap();
        f.write_all(br#"{"seq":3,"timest"#).unwrap();
        drop(f);

        let (mut store, reopened) = open(dir.path(), 0);
        assert_eq!(reopened, state);
        let rec = record(3);
        reopened.validate(&rec).unwrap();
        store.append(&rec).unwrap();
        assert_eq!(read_log(&log).unwrap().len(), 3);
    }

    #[test]
    fn snapshot_plus_tail_matches_full_replay() {
        let dir = tempfile::tempdir().unwrap();
        let (mut store, mut state) = open(dir.path(), 2);
        for seq in 1..=3 {
            let rec = record(seq);
            store.append(&rec).unwrap();
            state.apply(&rec);
            store.maybe_snapshot(&state).unwrap();
        }
        assert!(dir.path().join(SNAPSHOT_FILE).exists());
        let (_, reopened) = open(dir.path(), 2);
        assert_eq!(reopened, state);
        let replayed = replay_from(&dir.path().join(LOG_FILE), State::new(ScoringConstants::default())).unwrap();
        assert_eq!(replayed, state);
    }

    #[test]
    fn corrupt_interior_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join(LOG_FILE);
        let good = serde_json::to_string(&record(1)).unwrap();
        fs::write(&log, format!("not json\n{good}\n")).unwrap();
        assert!(matches!(read_log(&log), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
