use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::command::Command;
use super::log::{LogRecord, QuestFold, RecordKind};
use crate::llm::{CompletionParams, LlmBackend};
use crate::npc::{ConversationState, NpcProfile, ProfileError, SubGoalOutcome, TurnError, DEFAULT_K};
use crate::quest::QuestProgress;
use crate::world::{create_world, ActionOutcome, EntityKind, WorldState, PLAYER_ID};

/// How far away an NPC can hear the player.
pub const HEARING_RADIUS: i32 = 8;
pub const NO_ONE_HEARS: &str = "no one can hear you";
pub const SYSTEM_ACTOR: &str = "system";

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub seed: u64,
    pub k: u32,
    pub turn_budget: u32,
    pub tick_budget: u64,
    pub params: CompletionParams,
    pub profiles: Vec<NpcProfile>,
    /// Defaults to `session-<seed>`.
    pub session_id: Option<String>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            seed: 7,
            k: DEFAULT_K,
            turn_budget: 200,
            tick_budget: 5000,
            params: CompletionParams::default(),
            profiles: NpcProfile::shipped(),
            session_id: None,
        }
    }
}

impl SessionConfig {
    pub fn with_seed(seed: u64) -> Self {
        SessionConfig { seed, ..Self::default() }
    }

    pub fn id(&self) -> String {
        self.session_id.clone().unwrap_or_else(|| format!("session-{}", self.seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    QuestComplete,
    TurnBudget,
    TickBudget,
    PlayerDead,
    InputExhausted,
    Disconnected,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("session already ended ({0:?})")]
    Ended(EndReason),
    #[error(transparent)]
    Turn(#[from] TurnError),
}

/// One player's run through the quest: a world, the NPCs' conversations
/// and the log being written.
pub struct Session {
    config: SessionConfig,
    id: String,
    world: WorldState,
    npcs: Vec<ConversationState>,
    backend: Box<dyn LlmBackend + Send>,
    fold: QuestFold,
    records: Vec<LogRecord>,
    turn: u32,
    calls: u32,
    ended: Option<EndReason>,
}

impl Session {
    pub fn new(config: SessionConfig, backend: Box<dyn LlmBackend + Send>) -> Result<Session, SessionError> {
        if config.k == 0 || config.turn_budget == 0 || config.tick_budget == 0 {
            return Err(SessionError::Config("K and budgets must be at least 1".to_string()));
        }
        let world = create_world(config.seed);
        let mut npcs = Vec::new();
        for profile in &config.profiles {
            if world.entity(&profile.id).is_none_or(|e| e.kind != EntityKind::Npc) {
                return Err(SessionError::Config(format!("no NPC `{}` in the world", profile.id)));
            }
            npcs.push(ConversationState::new(profile.clone(), config.k)?);
        }
        npcs.sort_by(|a, b| a.profile.name.cmp(&b.profile.name));
        let mut session = Session {
            id: config.id(),
            config,
            world,
            npcs,
            backend,
            fold: QuestFold::new(),
            records: Vec::new(),
            turn: 0,
            calls: 0,
            ended: None,
        };
        let profiles: serde_json::Map<String, Value> =
            session.npcs.iter().map(|n| (n.profile.id.clone(), json!(n.profile.digest()))).collect();
        let start = json!({
            "seed": session.config.seed,
            "k": session.config.k,
            "turn_budget": session.config.turn_budget,
            "tick_budget": session.config.tick_budget,
            "profiles": profiles,
            "world_digest": session.world.digest(),
        });
        session.append(RecordKind::SessionStart, SYSTEM_ACTOR, start);
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn progress(&self) -> &QuestProgress {
        &self.fold.progress
    }

    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<LogRecord> {
        self.records
    }

    pub fn turn(&self) -> u32 {
        self.turn
    }

    pub fn ended(&self) -> Option<EndReason> {
        self.ended
    }

    pub fn conversation(&self, npc_id: &str) -> Option<&ConversationState> {
        self.npcs.iter().find(|n| n.profile.id == npc_id)
    }

    fn append(&mut self, kind: RecordKind, actor: &str, payload: Value) {
        let tick = self.world.tick;
        self.append_at(tick, kind, actor, payload);
    }

    fn append_at(&mut self, tick: u64, kind: RecordKind, actor: &str, payload: Value) {
        let record = LogRecord {
            session: self.id.clone(),
            seq: self.records.len() as u64 + 1,
            tick,
            kind,
            actor: actor.to_string(),
            payload,
        };
        let update = self.fold.feed(&record);
        self.records.push(record);
        for step in update.completed {
            let stamp = self.fold.progress.stamp(step).expect("just completed");
            let payload = json!({
                "step": step.as_str(),
                "letter": step.letter().to_string(),
                "status": "completed",
                "turn": stamp.turn,
            });
            self.append_at(tick, RecordKind::QuestStep, PLAYER_ID, payload);
        }
        if let Some(failure) = update.failed {
            let payload = json!({
                "step": failure.step.as_str(),
                "letter": failure.step.letter().to_string(),
                "status": "failed",
                "reason": failure.reason,
                "turn": self.fold.turn(),
            });
            self.append_at(tick, RecordKind::QuestStep, PLAYER_ID, payload);
        }
    }

    fn log_events(&mut self, events: Vec<crate::world::TickedEvent>) {
        for e in events {
            let actor = e.event.actor().map_or("world".to_string(), |a| a.as_str().to_string());
            let payload = serde_json::to_value(&e.event).expect("events serialize");
            self.append_at(e.tick, RecordKind::WorldEvent, &actor, payload);
        }
    }

    /// Logs every world event produced by actions since the last flush.
    fn flush_events(&mut self) {
        let events = self.world.take_events();
        self.log_events(events);
    }

    fn advance(&mut self) {
        self.flush_events();
        let events = self.world.tick();
        self.log_events(events);
    }

    fn may_tick(&self) -> bool {
        self.world.tick < self.config.tick_budget && self.world.player().is_alive()
    }

    /// The living NPC the player is talking to, if any is close enough.
    pub fn listener(&self) -> Option<usize> {
        let here = self.world.player().position;
        self.npcs
            .iter()
            .enumerate()
            .filter_map(|(i, n)| {
                let e = self.world.entity(&n.profile.id)?;
                let d = e.position.reach(here);
                (e.is_alive() && d <= HEARING_RADIUS).then_some((d, i))
            })
            .min()
            .map(|(_, i)| i)
    }

    /// Runs one player command, including the NPC's answer and the world
    /// ticks it takes. Returns the records it wrote.
    pub fn handle(&mut self, command: &Command) -> Result<&[LogRecord], SessionError> {
        if let Some(reason) = self.ended {
            return Err(SessionError::Ended(reason));
        }
        let first = self.records.len();
        self.turn += 1;
        let command_json = serde_json::to_value(command).expect("commands serialize");

        match command {
            Command::Say { text } => {
                self.append(RecordKind::Command, PLAYER_ID, json!({ "turn": self.turn, "command": command_json }));
                self.say(text)?;
                self.advance();
            }
            Command::Move { dir, steps } => {
                self.append(RecordKind::Command, PLAYER_ID, json!({ "turn": self.turn, "command": command_json }));
                for moved in 0..*steps {
                    let step = self.world.move_entity(PLAYER_ID, *dir);
                    if !step.ok {
                        let message = format!("{} after {moved} of {steps} steps", step.text);
                        self.append(RecordKind::Warning, PLAYER_ID, json!({ "message": message }));
                        if moved == 0 {
                            self.advance();
                        }
                        break;
                    }
                    self.advance();
                    if !self.may_tick() {
                        break;
                    }
                }
            }
            Command::Wait { ticks } => {
                self.log_command(&command_json, &ActionOutcome::success(format!("waited {ticks}")));
                for _ in 0..*ticks {
                    self.advance();
                    if !self.may_tick() {
                        break;
                    }
                }
            }
            other => {
                let outcome = self.act(other);
                self.log_command(&command_json, &outcome);
                self.advance();
            }
        }

        self.check_end();
        Ok(&self.records[first..])
    }

    fn log_command(&mut self, command: &Value, outcome: &ActionOutcome) {
        let payload = json!({ "turn": self.turn, "command": command, "ok": outcome.ok, "text": outcome.text });
        self.append(RecordKind::Command, PLAYER_ID, payload);
    }

    fn act(&mut self, command: &Command) -> ActionOutcome {
        let w = &mut self.world;
        match command {
            Command::Mine { block } => w.mine_block(PLAYER_ID, *block),
            Command::Place { item, dir } => w.place_block(PLAYER_ID, *item, *dir),
            Command::Attack { mob } => w.strike(PLAYER_ID, *mob),
            Command::Open => w.open_chest(PLAYER_ID),
            Command::Give { item, to } => {
                let target = self
                    .npcs
                    .iter()
                    .find(|n| n.profile.name.eq_ignore_ascii_case(to) || n.profile.id.eq_ignore_ascii_case(to))
                    .map(|n| n.profile.id.clone())
                    .unwrap_or_else(|| to.clone());
                w.transfer_item(PLAYER_ID, &target, *item)
            }
            Command::Say { .. } | Command::Move { .. } | Command::Wait { .. } => {
                unreachable!("handled by Session::handle")
            }
        }
    }

    fn say(&mut self, text: &str) -> Result<(), SessionError> {
        let Some(i) = self.listener() else {
            self.append(RecordKind::Utterance, PLAYER_ID, json!({ "text": text, "to": null }));
            self.append(RecordKind::Utterance, SYSTEM_ACTOR, json!({ "text": NO_ONE_HEARS }));
            return Ok(());
        };
        let npc_id = self.npcs[i].profile.id.clone();
        self.append(RecordKind::Utterance, PLAYER_ID, json!({ "text": text, "to": npc_id }));

        let outcome = self.npcs[i].take_turn(&mut self.world, text, self.backend.as_mut(), &self.config.params)?;

        for (call, result) in outcome.calls.iter().zip(&outcome.results) {
            self.calls += 1;
            let call_id = format!("call-{}", self.calls);
            self.append(
                RecordKind::FunctionCall,
                &npc_id,
                json!({ "call_id": call_id, "name": call.name, "arguments": call.arguments }),
            );
            self.append(
                RecordKind::FunctionReturn,
                &npc_id,
                json!({ "call_id": call_id, "ok": result.ok, "text": result.text }),
            );
        }
        for w in &outcome.warnings {
            self.append(RecordKind::Warning, &npc_id, json!({ "message": w }));
        }
        self.append(
            RecordKind::Utterance,
            &npc_id,
            json!({
                "text": outcome.reply,
                "exchange": outcome.exchange,
                "degraded": outcome.degraded,
                "completions": outcome.completions,
            }),
        );
        match outcome.sub_goal {
            Some(SubGoalOutcome::Set { text, completion }) => {
                let payload = json!({ "exchange": outcome.exchange, "text": text, "completion": completion });
                self.append(RecordKind::Subgoal, &npc_id, payload);
            }
            Some(SubGoalOutcome::Failed { error, completion }) => {
                let payload = json!({ "message": format!("sub-goal generation failed: {error}"), "completion": completion });
                self.append(RecordKind::Warning, &npc_id, payload);
            }
            None => {}
        }
        Ok(())
    }

    fn check_end(&mut self) {
        let reason = if self.fold.progress.quest_complete() {
            Some(EndReason::QuestComplete)
        } else if !self.world.player().is_alive() {
            Some(EndReason::PlayerDead)
        } else if self.world.tick >= self.config.tick_budget {
            Some(EndReason::TickBudget)
        } else if self.turn >= self.config.turn_budget {
            Some(EndReason::TurnBudget)
        } else {
            None
        };
        if let Some(reason) = reason {
            self.finish(reason);
        }
    }

    /// Closes the log. Later calls keep the first reason.
    pub fn finish(&mut self, reason: EndReason) -> EndReason {
        if let Some(done) = self.ended {
            return done;
        }
        self.flush_events();
        let progress = &self.fold.progress;
        let payload = json!({
            "reason": reason,
            "turns": self.turn,
            "completed": progress.completed_steps().iter().map(|s| s.letter().to_string()).collect::<Vec<_>>(),
            "failed": progress.failure().map(|f| f.step.letter().to_string()),
            "world_digest": self.world.digest(),
        });
        self.append(RecordKind::SessionEnd, SYSTEM_ACTOR, payload);
        self.ended = Some(reason);
        reason
    }
}

/// Everything a finished session leaves behind.
pub struct SessionOutput {
    pub records: Vec<LogRecord>,
    pub progress: QuestProgress,
    pub world: WorldState,
    pub reason: EndReason,
}

/// Plays `commands` until the session ends or they run out.
pub fn run_session(
    config: SessionConfig,
    backend: Box<dyn LlmBackend + Send>,
    commands: impl IntoIterator<Item = Command>,
) -> Result<SessionOutput, SessionError> {
    let mut session = Session::new(config, backend)?;
    for command in commands {
        if session.ended().is_some() {
            break;
        }
        session.handle(&command)?;
    }
    let reason = session.finish(EndReason::InputExhausted);
    let progress = session.progress().clone();
    let world = session.world().clone();
    Ok(SessionOutput { records: session.into_records(), progress, world, reason })
}
