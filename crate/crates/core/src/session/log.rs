use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::quest::{QuestInput, QuestProgress, QuestUpdate, Stamp};
use crate::world::{EntityId, WorldEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    SessionStart,
    Command,
    Utterance,
    FunctionCall,
    FunctionReturn,
    Subgoal,
    WorldEvent,
    QuestStep,
    Warning,
    SessionEnd,
}

/// One line of a session log. Field order here is the order on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session: String,
    pub seq: u64,
    pub tick: u64,
    pub kind: RecordKind,
    pub actor: String,
    pub payload: Value,
}

impl LogRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("log records serialize")
    }

    /// The quest-relevant input carried by this record, if any.
    pub fn quest_input(&self) -> Option<QuestInput> {
        match self.kind {
            RecordKind::WorldEvent => serde_json::from_value::<WorldEvent>(self.payload.clone()).ok().map(QuestInput::World),
            RecordKind::Utterance if self.payload.get("exchange").is_some() => {
                Some(QuestInput::Exchange { npc: EntityId::new(&self.actor) })
            }
            _ => None,
        }
    }

    /// The turn number a command record opens.
    pub fn command_turn(&self) -> Option<u32> {
        if self.kind != RecordKind::Command {
            return None;
        }
        self.payload.get("turn").and_then(Value::as_u64).map(|t| t as u32)
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, LogError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| LogError::Malformed { line: i + 1, message: e.to_string() }))
        .collect()
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    let text = std::fs::read_to_string(path).map_err(|source| LogError::Io { path: path.display().to_string(), source })?;
    parse_log(&text)
}

pub fn render_log(records: &[LogRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn write_log(path: &Path, records: &[LogRecord]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(render_log(records).as_bytes())?;
    file.flush()
}

/// Feeds quest-relevant records to a tracker the way a live session does:
/// stamps take the turn of the latest command and the record's tick.
#[derive(Debug, Clone, Default)]
pub struct QuestFold {
    pub progress: QuestProgress,
    turn: u32,
}

impl QuestFold {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, record: &LogRecord) -> QuestUpdate {
        if let Some(turn) = record.command_turn() {
            self.turn = turn;
        }
        match record.quest_input() {
            Some(input) => self.progress.observe(&input, Stamp { turn: self.turn, tick: record.tick }),
            None => QuestUpdate::default(),
        }
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }
}

pub fn progress_from_log(records: &[LogRecord]) -> QuestProgress {
    let mut fold = QuestFold::new();
    for r in records {
        fold.feed(r);
    }
    fold.progress
}
