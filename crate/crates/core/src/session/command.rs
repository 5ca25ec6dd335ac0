use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Direction, EntityKind, ItemKind};

/// Something the player does. One command is one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verb", rename_all = "snake_case")]
pub enum Command {
    Say { text: String },
    Move { dir: Direction, #[serde(default = "one")] steps: u32 },
    Mine { block: crate::world::BlockKind },
    Place { item: ItemKind, dir: Direction },
    Attack { mob: EntityKind },
    Open,
    Give { item: ItemKind, to: String },
    Wait { #[serde(default = "one")] ticks: u32 },
}

fn name<T: std::str::FromStr<Err = crate::world::UnknownName>>(s: &str) -> Result<T, CommandError> {
    s.parse().map_err(|e: crate::world::UnknownName| CommandError::Syntax(format!("{e}\n{COMMAND_HELP}")))
}

fn one() -> u32 {
    1
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommandError {
    #[error("line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("{0}")]
    Syntax(String),
}

pub const COMMAND_HELP: &str = "\
say <text>                 talk to the nearest NPC
move <dir> [steps]         walk north/south/east/west
mine <block>               mine a block next to you
place <item> <dir>         place a block (dir `down` pillars up)
attack <mob>               hit the nearest spider/zombie/creeper
open                       loot the nearest chest
give <item> <npc>          hand an item to an NPC
wait [ticks]               let time pass";

impl Command {
    /// Parses a JSON Lines player script; blank lines and lines starting
    /// with `#` are skipped.
    pub fn parse_script(text: &str) -> Result<Vec<Command>, CommandError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| CommandError::Script { line: i + 1, message: e.to_string() })
            })
            .collect()
    }

    pub fn load_script(path: &Path) -> Result<Vec<Command>, CommandError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CommandError::Script { line: 0, message: format!("{}: {e}", path.display()) })?;
        Self::parse_script(&text)
    }

    /// Parses the terse form typed at the interactive prompt, e.g.
    /// `move west 3` or `give diamond_sword alaric`.
    pub fn parse_line(line: &str) -> Result<Command, CommandError> {
        let line = line.trim();
        let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let words: Vec<&str> = rest.split_whitespace().collect();
        let bad = |what: &str| CommandError::Syntax(format!("{what}\n{COMMAND_HELP}"));
        let count = |s: Option<&&str>| -> Result<u32, CommandError> {
            match s {
                None => Ok(1),
                Some(s) => s.parse().ok().filter(|n| *n >= 1).ok_or_else(|| bad(&format!("not a count: {s}"))),
            }
        };
        match (verb.to_ascii_lowercase().as_str(), words.as_slice()) {
            ("say", _) if !rest.is_empty() => Ok(Command::Say { text: rest.to_string() }),
            ("move", [dir, tail @ ..]) if tail.len() <= 1 => Ok(Command::Move { dir: name(dir)?, steps: count(tail.first())? }),
            ("mine", [block]) => Ok(Command::Mine { block: name(block)? }),
            ("place", [item, dir]) => Ok(Command::Place { item: name(item)?, dir: name(dir)? }),
            ("attack", [mob]) => Ok(Command::Attack { mob: name(mob)? }),
            ("open", []) => Ok(Command::Open),
            ("give", [item, to]) => Ok(Command::Give { item: name(item)?, to: to.to_string() }),
            ("wait", tail) if tail.len() <= 1 => Ok(Command::Wait { ticks: count(tail.first())? }),
            _ => Err(bad(&format!("cannot understand `{line}`"))),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("commands serialize")
    }
}
