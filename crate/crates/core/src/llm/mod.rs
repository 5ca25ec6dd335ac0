//! Chat-completion providers. The NPC runtime builds a [`PromptDocument`]
//! and hands it to whichever [`LlmBackend`] the session was configured with.

mod remote;
mod scripted;
mod tape;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use remote::{RemoteBackend, RemoteConfig};
pub use scripted::{Matcher, ScriptRule, ScriptedBackend};
pub use tape::{read_tape, RecordingBackend, ReplayBackend, TapeEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    Npc,
    Player,
    FunctionReturn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

impl Message {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Message { role, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    /// Display name of the NPC the prompt speaks for.
    pub npc: String,
    pub messages: Vec<Message>,
}

impl PromptDocument {
    pub fn new(npc: impl Into<String>) -> Self {
        PromptDocument { npc: npc.into(), messages: Vec::new() }
    }

    pub fn push(&mut self, role: Role, text: impl Into<String>) {
        self.messages.push(Message::new(role, text));
    }

    /// The text of one message as it appears in the flattened transcript.
    pub fn line(&self, message: &Message) -> String {
        match message.role {
            Role::System => message.text.clone(),
            Role::Npc => format!("{}: {}", self.npc, message.text),
            Role::Player => format!("Player: {}", message.text),
            Role::FunctionReturn => format!("Function_Returns: {}", message.text),
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&self.line(m));
            out.push('\n');
        }
        out
    }

    /// Messages written since the NPC last spoke. A leading system block is
    /// left out unless it is the whole document.
    pub fn latest(&self) -> &[Message] {
        let opening = usize::from(self.messages.len() > 1 && self.messages[0].role == Role::System);
        let start = self.messages.iter().rposition(|m| m.role == Role::Npc).map_or(opening, |i| i + 1);
        &self.messages[start..]
    }

    pub fn latest_text(&self) -> String {
        self.latest().iter().map(|m| self.line(m)).collect::<Vec<_>>().join("\n")
    }

    /// SHA-256 over the document's canonical JSON.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("prompt documents serialize");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f32,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl Default for CompletionParams {
    fn default() -> Self {
        CompletionParams { temperature: 0.7, max_tokens: 512, timeout: Duration::from_secs(30) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request timed out")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("unexpected response: {0}")]
    Protocol(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no script rule matched call {call}")]
    NoRuleMatched { call: usize },
    #[error("tape exhausted at turn {turn}")]
    TapeExhausted { turn: usize },
    #[error("prompt digest mismatch at turn {turn}: tape has {expected}, prompt is {actual}")]
    DigestMismatch { turn: usize, expected: String, actual: String },
    /// An error that was recorded on a tape and is being played back.
    #[error("{0}")]
    Replayed(String),
}

pub trait LlmBackend {
    fn complete(&mut self, doc: &PromptDocument, params: &CompletionParams) -> Result<String, BackendError>;
}

impl<B: LlmBackend + ?Sized> LlmBackend for Box<B> {
    fn complete(&mut self, doc: &PromptDocument, params: &CompletionParams) -> Result<String, BackendError> {
        (**self).complete(doc, params)
    }
}

impl<B: LlmBackend + ?Sized> LlmBackend for &mut B {
    fn complete(&mut self, doc: &PromptDocument, params: &CompletionParams) -> Result<String, BackendError> {
        (**self).complete(doc, params)
    }
}
