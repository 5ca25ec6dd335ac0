//! One NPC's side of the conversation: prompt assembly, the act-then-speak
//! turn loop and periodic sub-goals.

mod profile;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{dispatch, format_calls, parse_npc_output, FunctionCall, FunctionResult, Registry};
use crate::llm::{BackendError, CompletionParams, LlmBackend, PromptDocument, Role, TapeEntry};
use crate::world::WorldState;

pub use profile::{CallExample, NpcProfile, ProfileError, ReturnExample, SkillEntry, NO_INVENTION_RULE};

/// Reply used when the backend could not produce one.
pub const FALLBACK_REPLY: &str = "…";
pub const HISTORY_WINDOW: usize = 40;
pub const DEFAULT_K: u32 = 6;
pub const SUB_GOAL_PREFIX: &str = "[Sub-goal]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Player,
    Npc,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub calls: Vec<FunctionCall>,
    pub results: Vec<FunctionResult>,
    pub sub_goal: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Act,
    Speak,
    SubGoal,
}

/// One backend call made during a turn, as it would appear on a tape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub purpose: Purpose,
    #[serde(flatten)]
    pub entry: TapeEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubGoalOutcome {
    Set { text: String, completion: Completion },
    Failed { error: String, completion: Completion },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnOutcome {
    pub exchange: u32,
    pub reply: String,
    pub calls: Vec<FunctionCall>,
    pub results: Vec<FunctionResult>,
    pub warnings: Vec<String>,
    pub degraded: bool,
    /// Act and speak calls, in order.
    pub completions: Vec<Completion>,
    pub sub_goal: Option<SubGoalOutcome>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurnError {
    #[error("{0} cannot talk while dead")]
    NpcDead(String),
    #[error("sub-goal is not due at exchange {exchange} (K = {k})")]
    SubGoalNotDue { exchange: u32, k: u32 },
}

#[derive(Debug, Clone)]
pub struct ConversationState {
    pub profile: NpcProfile,
    pub registry: Registry,
    pub turns: Vec<ConversationTurn>,
    pub active_sub_goal: Option<String>,
    pub exchange_count: u32,
    pub k: u32,
}

impl ConversationState {
    pub fn new(profile: NpcProfile, k: u32) -> Result<Self, ProfileError> {
        let registry = profile.registry()?;
        Ok(ConversationState { profile, registry, turns: Vec::new(), active_sub_goal: None, exchange_count: 0, k: k.max(1) })
    }

    fn push_turn(&mut self, speaker: Speaker, text: String) -> &mut ConversationTurn {
        let index = self.turns.len() + 1;
        self.turns.push(ConversationTurn { index, speaker, text, calls: Vec::new(), results: Vec::new(), sub_goal: None });
        self.turns.last_mut().expect("just pushed")
    }

    /// Builds the prompt for the next completion. Pending results belong to
    /// calls made earlier in the current turn.
    pub fn assemble_prompt(&self, pending: &[FunctionResult]) -> PromptDocument {
        let mut doc = PromptDocument::new(&self.profile.name);
        doc.push(Role::System, self.profile.system_block(&self.registry));
        let start = self.turns.len().saturating_sub(HISTORY_WINDOW);
        for turn in &self.turns[start..] {
            match turn.speaker {
                Speaker::Player => doc.push(Role::Player, &turn.text),
                Speaker::System => doc.push(Role::System, &turn.text),
                Speaker::Npc => {
                    push_results(&mut doc, &turn.results);
                    doc.push(Role::Npc, &turn.text);
                }
            }
        }
        push_results(&mut doc, pending);
        if let Some(goal) = &self.active_sub_goal {
            doc.push(Role::System, format!("{SUB_GOAL_PREFIX} {goal}"));
        }
        doc
    }

    /// Prompt asking for a new sub-goal from the main goal and the last K
    /// exchanges.
    pub fn sub_goal_prompt(&self) -> PromptDocument {
        let name = &self.profile.name;
        let mut doc = PromptDocument::new(name);
        doc.push(
            Role::System,
            format!(
                "You are guiding {name}, a character in a game, through a conversation with the player.\n{}",
                self.profile.main_goal
            ),
        );
        let npc_turns: Vec<usize> =
            self.turns.iter().enumerate().filter(|(_, t)| t.speaker == Speaker::Npc).map(|(i, _)| i).collect();
        let from = npc_turns
            .len()
            .checked_sub(self.k as usize)
            .and_then(|i| npc_turns.get(i))
            .map_or(0, |&i| i.saturating_sub(1));
        for turn in &self.turns[from..] {
            match turn.speaker {
                Speaker::Player => doc.push(Role::Player, &turn.text),
                Speaker::Npc => doc.push(Role::Npc, &turn.text),
                Speaker::System => {}
            }
        }
        doc.push(
            Role::System,
            format!(
                "Write the next sub-goal for {name} in one sentence. It should keep the conversation moving towards {name}'s main goal."
            ),
        );
        doc
    }

    /// Handles one player utterance: ask the model, carry out its calls,
    /// then ask again with the results so the reply can reflect them.
    pub fn take_turn(
        &mut self,
        world: &mut WorldState,
        utterance: &str,
        backend: &mut dyn LlmBackend,
        params: &CompletionParams,
    ) -> Result<TurnOutcome, TurnError> {
        let alive = world.entity(&self.profile.id).is_some_and(|e| e.is_alive());
        if !alive {
            return Err(TurnError::NpcDead(self.profile.name.clone()));
        }
        self.push_turn(Speaker::Player, utterance.to_string());

        let mut completions = Vec::new();
        let mut warnings = Vec::new();
        let mut degraded = false;
        let mut calls = Vec::new();
        let mut results = Vec::new();
        let mut spoken = Vec::new();

        let act_doc = self.assemble_prompt(&[]);
        match ask(backend, &act_doc, params, Purpose::Act, &mut completions) {
            Ok(raw) => {
                let parsed = parse_npc_output(&raw);
                warnings.extend(parsed.warnings.iter().map(|w| format!("parse: {}: {}", w.message, w.fragment)));
                spoken.push(parsed.speech);
                for call in parsed.calls {
                    results.push(dispatch(&self.registry, world, &self.profile.id, &call));
                    calls.push(call);
                }
            }
            Err(e) => {
                warnings.push(format!("backend: {e}"));
                degraded = true;
            }
        }

        if !results.is_empty() {
            let speak_doc = self.assemble_prompt(&results);
            match ask(backend, &speak_doc, params, Purpose::Speak, &mut completions) {
                Ok(raw) => {
                    let parsed = parse_npc_output(&raw);
                    warnings.extend(parsed.warnings.iter().map(|w| format!("parse: {}: {}", w.message, w.fragment)));
                    if !parsed.calls.is_empty() {
                        warnings.push(format!("ignored follow-up calls: {}", format_calls(&parsed.calls)));
                    }
                    spoken.push(parsed.speech);
                }
                Err(e) => {
                    warnings.push(format!("backend: {e}"));
                    degraded = true;
                }
            }
        }

        let reply = if degraded {
            FALLBACK_REPLY.to_string()
        } else {
            let text = spoken.into_iter().filter(|s| !s.is_empty()).collect::<Vec<_>>().join(" ");
            if text.is_empty() {
                FALLBACK_REPLY.to_string()
            } else {
                text
            }
        };

        let turn = self.push_turn(Speaker::Npc, reply.clone());
        turn.calls = calls.clone();
        turn.results = results.clone();
        self.exchange_count += 1;

        let sub_goal = if self.exchange_count.is_multiple_of(self.k) {
            Some(self.generate_sub_goal(backend, params)?)
        } else {
            None
        };

        Ok(TurnOutcome {
            exchange: self.exchange_count,
            reply,
            calls,
            results,
            warnings,
            degraded,
            completions,
            sub_goal,
        })
    }

    /// Asks for a fresh sub-goal. Only legal right after every K-th exchange.
    pub fn generate_sub_goal(
        &mut self,
        backend: &mut dyn LlmBackend,
        params: &CompletionParams,
    ) -> Result<SubGoalOutcome, TurnError> {
        if self.exchange_count == 0 || !self.exchange_count.is_multiple_of(self.k) {
            return Err(TurnError::SubGoalNotDue { exchange: self.exchange_count, k: self.k });
        }
        let doc = self.sub_goal_prompt();
        let mut completions = Vec::new();
        let result = ask(backend, &doc, params, Purpose::SubGoal, &mut completions);
        let completion = completions.pop().expect("one completion recorded");
        let text = result.map_err(|e| e.to_string()).and_then(|raw| {
            let line = raw.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
            let line = line.strip_prefix(SUB_GOAL_PREFIX).unwrap_or(line).trim();
            if line.is_empty() {
                Err("empty sub-goal".to_string())
            } else {
                Ok(line.to_string())
            }
        });
        Ok(match text {
            Ok(text) => {
                self.active_sub_goal = Some(text.clone());
                if let Some(turn) = self.turns.iter_mut().rev().find(|t| t.speaker == Speaker::Npc) {
                    turn.sub_goal = Some(text.clone());
                }
                SubGoalOutcome::Set { text, completion }
            }
            Err(error) => SubGoalOutcome::Failed { error, completion },
        })
    }
}

fn push_results(doc: &mut PromptDocument, results: &[FunctionResult]) {
    if results.is_empty() {
        return;
    }
    let calls: Vec<FunctionCall> = results.iter().map(|r| r.call.clone()).collect();
    doc.push(Role::Npc, format_calls(&calls));
    for r in results {
        doc.push(Role::FunctionReturn, &r.text);
    }
}

fn ask(
    backend: &mut dyn LlmBackend,
    doc: &PromptDocument,
    params: &CompletionParams,
    purpose: Purpose,
    log: &mut Vec<Completion>,
) -> Result<String, BackendError> {
    let result = backend.complete(doc, params);
    log.push(Completion { purpose, entry: TapeEntry::from_result(doc.digest(), &result) });
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Matcher, ScriptRule, ScriptedBackend};
    use crate::world::{create_world, BlockKind, ELENA_ID};

    /// Backend that answers from a list and remembers every prompt.
    struct Seen {
        replies: Vec<Result<String, BackendError>>,
        prompts: Vec<PromptDocument>,
    }

    impl LlmBackend for Seen {
        fn complete(&mut self, doc: &PromptDocument, _: &CompletionParams) -> Result<String, BackendError> {
            self.prompts.push(doc.clone());
            if self.replies.is_empty() {
                Ok("Okay.".to_string())
            } else {
                self.replies.remove(0)
            }
        }
    }

    fn seen(replies: &[&str]) -> Seen {
        Seen { replies: replies.iter().map(|r| Ok(r.to_string())).collect(), prompts: Vec::new() }
    }

    fn elena() -> ConversationState {
        ConversationState::new(NpcProfile::elena(), DEFAULT_K).unwrap()
    }

    #[test]
    fn prompt_is_deterministic_and_gated() {
        let s = elena();
        let a = s.assemble_prompt(&[]);
        assert_eq!(a, s.assemble_prompt(&[]));
        assert_eq!(a.messages.len(), 1);
        assert_eq!(a.messages[0].role, Role::System);
        assert!(!a.render().contains("attackEntity"));
    }

    #[test]
    fn pending_results_become_return_lines() {
        let s = elena();
        let r = FunctionResult {
            call: FunctionCall::new("dropItem", &["iron_pickaxe"]),
            ok: false,
            text: "do not have iron_pickaxe".into(),
        };
        let doc = s.assemble_prompt(&[r]);
        assert!(doc.render().lines().any(|l| l == "Function_Returns: do not have iron_pickaxe"));
    }

    #[test]
    fn mining_turn_removes_a_block() {
        let mut w = create_world(7);
        let before = w.blocks.count(BlockKind::Dirt);
        let mut b = seen(&["Let me dig. Function: [{'name':'mineBlock', 'arguments': ['dirt']}]", "I just mined a dirt block for you."]);
        let mut s = elena();
        let out = s.take_turn(&mut w, "Can you get me some dirt?", &mut b, &CompletionParams::default()).unwrap();
        assert_eq!(out.reply, "Let me dig. I just mined a dirt block for you.");
        assert_eq!(out.results[0].text, "mined successfully");
        assert_eq!(w.blocks.count(BlockKind::Dirt), before - 1);
        assert_eq!(b.prompts.len(), 2);
        assert_eq!(out.completions.len(), 2);
        assert!(b.prompts[1].render().contains("Function_Returns: mined successfully"));
    }

    #[test]
    fn failure_text_reaches_the_second_prompt() {
        let mut w = create_world(7);
        w.entity_mut(ELENA_ID).unwrap().inventory.remove(crate::world::ItemKind::IronPickaxe, 1);
        let mut b = seen(&["Function: [{'name':'dropItem', 'arguments': ['iron_pickaxe']}]", "Sorry I don't have it with me now."]);
        let mut s = elena();
        let out = s.take_turn(&mut w, "Give me your pickaxe", &mut b, &CompletionParams::default()).unwrap();
        assert_eq!(b.prompts.len(), 2);
        assert!(b.prompts[0].messages.iter().all(|m| m.role != Role::FunctionReturn));
        assert!(b.prompts[1].render().lines().any(|l| l == "Function_Returns: do not have iron_pickaxe"));
        assert_eq!(out.reply, "Sorry I don't have it with me now.");
        // The next prompt keeps the exchange, returns included, in history.
        let next = s.assemble_prompt(&[]).render();
        assert!(next.contains("Function_Returns: do not have iron_pickaxe\nElena: Sorry I don't have it with me now.\n"));
    }

    #[test]
    fn backend_error_degrades_but_counts() {
        let mut w = create_world(7);
        let mut b = Seen { replies: vec![Err(BackendError::Timeout)], prompts: Vec::new() };
        let mut s = elena();
        let out = s.take_turn(&mut w, "hello?", &mut b, &CompletionParams::default()).unwrap();
        assert!(out.degraded);
        assert_eq!(out.reply, FALLBACK_REPLY);
        assert_eq!(s.exchange_count, 1);
        assert_eq!(s.turns.len(), 2);
    }

    #[test]
    fn sub_goals_every_k_exchanges() {
        let mut w = create_world(7);
        let mut b = ScriptedBackend::new(vec![
            ScriptRule::new(Matcher::Substring("Write the next sub-goal".into()), "[Sub-goal] Ask the player to help Alaric."),
            ScriptRule::new(Matcher::Always, "Hello there."),
        ])
        .unwrap();
        let mut s = elena();
        let mut at = Vec::new();
        for i in 1..=30 {
            let out = s.take_turn(&mut w, &format!("line {i}"), &mut b, &CompletionParams::default()).unwrap();
            if let Some(SubGoalOutcome::Set { text, .. }) = out.sub_goal {
                assert_eq!(text, "Ask the player to help Alaric.");
                at.push(out.exchange);
            }
        }
        assert_eq!(at, [6, 12, 18, 24, 30]);
        assert!(s.assemble_prompt(&[]).render().ends_with("[Sub-goal] Ask the player to help Alaric.\n"));
    }

    #[test]
    fn sub_goal_not_due_before_k() {
        let mut s = elena();
        let mut b = seen(&[]);
        s.exchange_count = 5;
        assert_eq!(
            s.generate_sub_goal(&mut b, &CompletionParams::default()),
            Err(TurnError::SubGoalNotDue { exchange: 5, k: 6 })
        );
        assert!(b.prompts.is_empty());
    }

    #[test]
    fn sub_goal_prompt_holds_last_k_exchanges() {
        let mut w = create_world(7);
        let mut b = seen(&[]);
        let mut s = ConversationState::new(NpcProfile::elena(), 2).unwrap();
        for i in 1..=4 {
            s.take_turn(&mut w, &format!("line {i}"), &mut b, &CompletionParams::default()).unwrap();
        }
        let doc = b.prompts.last().unwrap().render();
        assert!(doc.contains("main goal is to convince the player"));
        assert!(!doc.contains("line 2") && doc.contains("Player: line 3") && doc.contains("Player: line 4"));
    }

    #[test]
    fn history_window_drops_whole_old_turns() {
        let mut w = create_world(7);
        let mut b = seen(&[]);
        let mut s = ConversationState::new(NpcProfile::elena(), 100).unwrap();
        for i in 1..=25 {
            s.take_turn(&mut w, &format!("utterance {i:02}"), &mut b, &CompletionParams::default()).unwrap();
        }
        let doc = s.assemble_prompt(&[]);
        assert_eq!(doc.messages.len(), 1 + HISTORY_WINDOW);
        assert_eq!(doc.messages[1].text, "utterance 06");
    }

    #[test]
    fn dead_npc_does_not_talk() {
        let mut w = create_world(7);
        w.entity_mut(ELENA_ID).unwrap().health = 0;
        let mut s = elena();
        let r = s.take_turn(&mut w, "hi", &mut seen(&[]), &CompletionParams::default());
        assert_eq!(r, Err(TurnError::NpcDead("Elena".into())));
    }
}
