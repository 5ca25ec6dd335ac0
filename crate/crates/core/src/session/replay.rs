use serde_json::Value;
use thiserror::Error;

use super::command::Command;
use super::log::{LogRecord, RecordKind};
use super::runner::{EndReason, Session, SessionConfig, SessionError};
use crate::llm::{ReplayBackend, TapeEntry};
use crate::quest::QuestProgress;
use crate::world::WorldState;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("seq {found} where {expected} was expected")]
    SeqGap { expected: u64, found: u64 },
    #[error("seq {seq}: {message}")]
    BadRecord { seq: u64, message: String },
    #[error("log is truncated after seq {last}: no session_end record")]
    Truncated { last: u64 },
    #[error("seq {seq}: NPC profile {npc} differs from the one the log was recorded with")]
    ProfileMismatch { seq: u64, npc: String },
    #[error("seq {seq}: replay diverged\n  logged:   {expected}\n  replayed: {actual}")]
    Diverged { seq: u64, expected: String, actual: String },
    #[error(transparent)]
    Session(#[from] SessionError),
}

#[derive(Debug)]
pub struct ReplayOutcome {
    pub world: WorldState,
    pub progress: QuestProgress,
    pub records: Vec<LogRecord>,
}

fn field<'a>(record: &'a LogRecord, key: &str) -> Result<&'a Value, ReplayError> {
    record
        .payload
        .get(key)
        .ok_or_else(|| ReplayError::BadRecord { seq: record.seq, message: format!("missing `{key}`") })
}

fn number(record: &LogRecord, key: &str) -> Result<u64, ReplayError> {
    field(record, key)?
        .as_u64()
        .ok_or_else(|| ReplayError::BadRecord { seq: record.seq, message: format!("`{key}` is not a number") })
}

fn decode<T: serde::de::DeserializeOwned>(record: &LogRecord, value: &Value) -> Result<T, ReplayError> {
    serde_json::from_value(value.clone()).map_err(|e| ReplayError::BadRecord { seq: record.seq, message: e.to_string() })
}

/// Backend answers recorded in the log, in the order they were requested.
pub fn tape_from_log(records: &[LogRecord]) -> Result<Vec<TapeEntry>, ReplayError> {
    let mut tape = Vec::new();
    for r in records {
        match r.kind {
            RecordKind::Utterance => {
                if let Some(list) = r.payload.get("completions") {
                    tape.extend(decode::<Vec<TapeEntry>>(r, list)?);
                }
            }
            RecordKind::Subgoal | RecordKind::Warning => {
                if let Some(c) = r.payload.get("completion") {
                    tape.push(decode::<TapeEntry>(r, c)?);
                }
            }
            _ => {}
        }
    }
    Ok(tape)
}

/// Re-runs a logged session from its seed, commands and recorded model
/// replies, and checks that it reproduces the log record for record.
///
/// `base` supplies the NPC profiles and completion parameters; an empty log
/// yields a fresh world from `base.seed`.
pub fn replay(records: &[LogRecord], base: &SessionConfig) -> Result<ReplayOutcome, ReplayError> {
    if records.is_empty() {
        let session = Session::new(base.clone(), Box::new(ReplayBackend::new(Vec::new())))?;
        return Ok(ReplayOutcome {
            world: session.world().clone(),
            progress: session.progress().clone(),
            records: Vec::new(),
        });
    }
    for (i, r) in records.iter().enumerate() {
        let expected = i as u64 + 1;
        if r.seq != expected {
            return Err(ReplayError::SeqGap { expected, found: r.seq });
        }
    }
    let start = &records[0];
    if start.kind != RecordKind::SessionStart {
        return Err(ReplayError::BadRecord { seq: 1, message: "log does not begin with session_start".to_string() });
    }
    let last = records.last().expect("non-empty");
    if last.kind != RecordKind::SessionEnd {
        return Err(ReplayError::Truncated { last: last.seq });
    }
    let reason: EndReason = decode(last, field(last, "reason")?)?;

    let config = SessionConfig {
        seed: number(start, "seed")?,
        k: number(start, "k")? as u32,
        turn_budget: number(start, "turn_budget")? as u32,
        tick_budget: number(start, "tick_budget")?,
        session_id: Some(start.session.clone()),
        ..base.clone()
    };
    let digests = field(start, "profiles")?;
    for profile in &config.profiles {
        if digests.get(&profile.id).and_then(Value::as_str) != Some(profile.digest().as_str()) {
            return Err(ReplayError::ProfileMismatch { seq: 1, npc: profile.id.clone() });
        }
    }

    let mut commands = Vec::new();
    for r in records.iter().filter(|r| r.kind == RecordKind::Command) {
        commands.push(decode::<Command>(r, field(r, "command")?)?);
    }
    let tape = tape_from_log(records)?;

    let mut session = Session::new(config, Box::new(ReplayBackend::new(tape)))?;
    for command in &commands {
        if session.ended().is_some() {
            break;
        }
        session.handle(command)?;
    }
    session.finish(reason);

    let produced = session.records();
    for i in 0..records.len().max(produced.len()) {
        let line = |r: Option<&LogRecord>| r.map_or("<missing>".to_string(), LogRecord::to_line);
        if records.get(i) != produced.get(i) {
            return Err(ReplayError::Diverged {
                seq: i as u64 + 1,
                expected: line(records.get(i)),
                actual: line(produced.get(i)),
            });
        }
    }
    Ok(ReplayOutcome {
        world: session.world().clone(),
        progress: session.progress().clone(),
        records: session.into_records(),
    })
}
