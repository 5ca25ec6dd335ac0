//! The bundled demo: a scripted player and scripted NPC replies that carry
//! the quest from the first greeting to handing over the sword.

use super::command::Command;
use super::runner::{run_session, SessionConfig, SessionError, SessionOutput};
use crate::llm::{ScriptRule, ScriptedBackend};

pub const WALKTHROUGH_PLAYER: &str = include_str!("../../assets/walkthrough/player.jsonl");
pub const WALKTHROUGH_BACKEND: &str = include_str!("../../assets/walkthrough/backend.jsonl");

pub fn walkthrough_commands() -> Vec<Command> {
    Command::parse_script(WALKTHROUGH_PLAYER).expect("bundled player script parses")
}

pub fn walkthrough_rules() -> Vec<ScriptRule> {
    ScriptedBackend::parse_rules(WALKTHROUGH_BACKEND).expect("bundled backend script parses")
}

pub fn walkthrough_backend() -> ScriptedBackend {
    ScriptedBackend::new(walkthrough_rules()).expect("bundled rules compile")
}

/// Runs the bundled walkthrough with the default seed and budgets.
pub fn run_walkthrough() -> Result<SessionOutput, SessionError> {
    run_session(SessionConfig::default(), Box::new(walkthrough_backend()), walkthrough_commands())
}
