//! The line-per-message JSON protocol spoken by `serve`.
//!
//! Client messages are session commands (`{"verb":"say","text":"hi"}`) plus
//! `{"verb":"hello"}`, which asks for a full world snapshot. Server messages
//! carry a `type` of `utterance`, `world_delta`, `quest_progress`,
//! `subgoal_notice` or `error`.

use serde_json::{json, Value};

use questforge::session::{Command, LogRecord, RecordKind, Session};

pub enum ClientMessage {
    Hello,
    Command(Command),
}

pub fn parse_client(text: &str) -> Result<ClientMessage, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
    if value.get("verb").and_then(Value::as_str) == Some("hello") {
        return Ok(ClientMessage::Hello);
    }
    serde_json::from_value(value).map(ClientMessage::Command).map_err(|e| format!("bad command: {e}"))
}

pub fn error(message: &str) -> Value {
    json!({"type": "error", "message": message})
}

fn player_view(session: &Session) -> Value {
    let p = session.world().player();
    json!({"position": p.position, "health": p.health, "inventory": p.inventory})
}

fn completed_letters(session: &Session) -> Vec<String> {
    session.progress().completed_steps().iter().map(|s| s.letter().to_string()).collect()
}

pub fn snapshot(session: &Session) -> Value {
    json!({
        "type": "world_delta",
        "session": session.id(),
        "tick": session.world().tick,
        "snapshot": session.world(),
        "player": player_view(session),
        "completed": completed_letters(session),
    })
}

/// Server messages for the records one command produced, in order: the
/// utterances and notices as they occurred, then one `world_delta` with the
/// command's outcome and world events, then quest updates.
pub fn messages(session: &Session, records: &[LogRecord], debug: bool) -> Vec<Value> {
    let mut out = Vec::new();
    let mut events = Vec::new();
    let mut result = Value::Null;
    let mut progress = Vec::new();
    for r in records {
        match r.kind {
            RecordKind::Command => {
                if r.payload.get("ok").is_some() {
                    result = json!({"ok": r.payload["ok"], "text": r.payload["text"]});
                }
            }
            RecordKind::Utterance => out.push(json!({
                "type": "utterance",
                "speaker": r.actor,
                "to": r.payload.get("to").cloned().unwrap_or(Value::Null),
                "text": r.payload["text"],
            })),
            RecordKind::Subgoal if debug => out.push(json!({
                "type": "subgoal_notice",
                "npc": r.actor,
                "exchange": r.payload["exchange"],
                "text": r.payload["text"],
            })),
            RecordKind::WorldEvent => events.push(r.payload.clone()),
            RecordKind::QuestStep => progress.push(json!({
                "type": "quest_progress",
                "step": r.payload["step"],
                "letter": r.payload["letter"],
                "status": r.payload["status"],
                "completed": completed_letters(session),
            })),
            RecordKind::Warning if debug => out.push(error(r.payload["message"].as_str().unwrap_or("warning"))),
            RecordKind::SessionEnd => progress.push(json!({
                "type": "quest_progress",
                "ended": r.payload["reason"],
                "completed": completed_letters(session),
            })),
            _ => {}
        }
    }
    out.push(json!({
        "type": "world_delta",
        "tick": session.world().tick,
        "result": result,
        "events": events,
        "player": player_view(session),
    }));
    out.extend(progress);
    out
}
