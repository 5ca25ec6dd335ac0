//! Running a player through the quest and the structured log it leaves.

mod command;
mod log;
mod replay;
mod runner;
mod walkthrough;

pub use command::{Command, CommandError, COMMAND_HELP};
pub use log::{
    parse_log, progress_from_log, read_log, render_log, write_log, LogError, LogRecord, QuestFold, RecordKind,
};
pub use replay::{replay, tape_from_log, ReplayError, ReplayOutcome};
pub use runner::{
    run_session, EndReason, Session, SessionConfig, SessionError, SessionOutput, HEARING_RADIUS, NO_ONE_HEARS,
    SYSTEM_ACTOR,
};
pub use walkthrough::{
    run_walkthrough, walkthrough_backend, walkthrough_commands, walkthrough_rules, WALKTHROUGH_BACKEND,
    WALKTHROUGH_PLAYER,
};
