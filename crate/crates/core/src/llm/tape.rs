use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionParams, LlmBackend, PromptDocument};

/// One recorded completion. Failed calls keep their error text instead of a
/// reply so that degraded turns replay the same way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapeEntry {
    pub digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TapeEntry {
    pub fn from_result(digest: String, result: &Result<String, BackendError>) -> Self {
        match result {
            Ok(reply) => TapeEntry { digest, reply: Some(reply.clone()), error: None },
            Err(e) => TapeEntry { digest, reply: None, error: Some(e.to_string()) },
        }
    }

    pub fn to_result(&self) -> Result<String, BackendError> {
        match (&self.reply, &self.error) {
            (Some(reply), _) => Ok(reply.clone()),
            (None, Some(e)) => Err(BackendError::Replayed(e.clone())),
            (None, None) => Err(BackendError::Replayed("empty tape entry".to_string())),
        }
    }
}

pub fn read_tape(path: &Path) -> Result<Vec<TapeEntry>, BackendError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| BackendError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| BackendError::Config(format!("tape line {}: {e}", i + 1))))
        .collect()
}

/// Wraps another backend and keeps a tape of everything it answered.
pub struct RecordingBackend<B> {
    inner: B,
    entries: Vec<TapeEntry>,
    sink: Option<File>,
}

impl<B: LlmBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        RecordingBackend { inner, entries: Vec::new(), sink: None }
    }

    /// Also appends each entry to `path` as it is recorded.
    pub fn with_file(inner: B, path: &Path) -> std::io::Result<Self> {
        let sink = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordingBackend { inner, entries: Vec::new(), sink: Some(sink) })
    }

    pub fn entries(&self) -> &[TapeEntry] {
        &self.entries
    }

    pub fn into_inner(self) -> B {
        self.inner
    }
}

impl<B: LlmBackend> LlmBackend for RecordingBackend<B> {
    fn complete(&mut self, doc: &PromptDocument, params: &CompletionParams) -> Result<String, BackendError> {
        let result = self.inner.complete(doc, params);
        let entry = TapeEntry::from_result(doc.digest(), &result);
        if let Some(sink) = &mut self.sink {
            let line = serde_json::to_string(&entry).expect("tape entries serialize");
            writeln!(sink, "{line}").map_err(|e| BackendError::Transport(format!("tape write failed: {e}")))?;
        }
        self.entries.push(entry);
        result
    }
}

/// Answers from a tape, checking that each prompt is the one recorded.
pub struct ReplayBackend {
    entries: Vec<TapeEntry>,
    next: usize,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TapeEntry>) -> Self {
        ReplayBackend { entries, next: 0 }
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::new(read_tape(path)?))
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.next
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&mut self, doc: &PromptDocument, _params: &CompletionParams) -> Result<String, BackendError> {
        let turn = self.next + 1;
        let entry = self.entries.get(self.next).ok_or(BackendError::TapeExhausted { turn })?;
        let actual = doc.digest();
        if entry.digest != actual {
            return Err(BackendError::DigestMismatch { turn, expected: entry.digest.clone(), actual });
        }
        self.next += 1;
        entry.to_result()
    }
}
