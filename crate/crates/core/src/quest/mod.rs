//! The seven-step rescue quest and per-corpus funnel statistics.

mod funnel;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::world::constants::in_island_region;
use crate::world::{EntityId, EntityKind, ItemKind, WorldEvent, ALARIC_ID, ELENA_ID, PLAYER_ID};

pub use funnel::{funnel, FunnelReport, StepCount};

/// Placeable blocks the player must hold at once for step (b).
pub const MATERIALS_NEEDED: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestStep {
    TalkElena,
    CollectMaterials,
    BuildPath,
    FightSpiders,
    TalkAlaric,
    FindSword,
    GiveSword,
}

impl QuestStep {
    pub const ALL: [QuestStep; 7] = [
        QuestStep::TalkElena,
        QuestStep::CollectMaterials,
        QuestStep::BuildPath,
        QuestStep::FightSpiders,
        QuestStep::TalkAlaric,
        QuestStep::FindSword,
        QuestStep::GiveSword,
    ];

    pub fn letter(self) -> char {
        (b'a' + self as u8) as char
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestStep::TalkElena => "talk_elena",
            QuestStep::CollectMaterials => "collect_materials",
            QuestStep::BuildPath => "build_path",
            QuestStep::FightSpiders => "fight_spiders",
            QuestStep::TalkAlaric => "talk_alaric",
            QuestStep::FindSword => "find_sword",
            QuestStep::GiveSword => "give_sword",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            QuestStep::TalkElena => "talk to Elena",
            QuestStep::CollectMaterials => "collect materials",
            QuestStep::BuildPath => "build path to island",
            QuestStep::FightSpiders => "fight spiders",
            QuestStep::TalkAlaric => "talk to Alaric",
            QuestStep::FindSword => "find the sword",
            QuestStep::GiveSword => "give sword to Alaric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub turn: u32,
    pub tick: u64,
}

/// What the tracker listens to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuestInput {
    World(WorldEvent),
    /// A completed player-to-NPC exchange with the NPC of this entity id.
    Exchange { npc: EntityId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestFailure {
    pub step: QuestStep,
    pub reason: String,
}

/// Conditions seen so far. Once true they stay true; steps are stamped from
/// them in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Facts {
    held: BTreeMap<ItemKind, u32>,
    talked_elena: bool,
    had_materials: bool,
    placed_blocks: u32,
    reached_island: bool,
    spiders_cleared: bool,
    talked_alaric: bool,
    had_sword: bool,
    sword_returned: bool,
}

impl Facts {
    fn holds(&self, step: QuestStep) -> bool {
        match step {
            QuestStep::TalkElena => self.talked_elena,
            QuestStep::CollectMaterials => self.had_materials,
            QuestStep::BuildPath => self.reached_island,
            QuestStep::FightSpiders => self.spiders_cleared,
            QuestStep::TalkAlaric => self.talked_alaric,
            QuestStep::FindSword => self.had_sword,
            QuestStep::GiveSword => self.sword_returned,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestProgress {
    completed: BTreeMap<QuestStep, Stamp>,
    failed: Option<QuestFailure>,
    facts: Facts,
}

/// What a single observation changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuestUpdate {
    pub completed: Vec<QuestStep>,
    pub failed: Option<QuestFailure>,
}

impl QuestProgress {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stamp(&self, step: QuestStep) -> Option<Stamp> {
        self.completed.get(&step).copied()
    }

    pub fn is_complete(&self, step: QuestStep) -> bool {
        self.completed.contains_key(&step)
    }

    pub fn completed_steps(&self) -> Vec<QuestStep> {
        self.completed.keys().copied().collect()
    }

    pub fn quest_complete(&self) -> bool {
        self.is_complete(QuestStep::GiveSword)
    }

    pub fn failure(&self) -> Option<&QuestFailure> {
        self.failed.as_ref()
    }

    pub fn next_step(&self) -> Option<QuestStep> {
        QuestStep::ALL.into_iter().find(|s| !self.is_complete(*s))
    }

    pub fn observe(&mut self, input: &QuestInput, at: Stamp) -> QuestUpdate {
        let mut update = QuestUpdate::default();
        if self.failed.is_some() || self.quest_complete() {
            return update;
        }
        let f = &mut self.facts;
        match input {
            QuestInput::Exchange { npc } => match npc.as_str() {
                ELENA_ID => f.talked_elena = true,
                ALARIC_ID => f.talked_alaric = true,
                _ => {}
            },
            QuestInput::World(event) => match event {
                WorldEvent::InventoryChanged { id, item, count } if id.as_str() == PLAYER_ID => {
                    f.held.insert(*item, *count);
                    let placeable: u32 = f.held.iter().filter(|(i, _)| i.is_placeable()).map(|(_, c)| *c).sum();
                    if placeable >= MATERIALS_NEEDED {
                        f.had_materials = true;
                    }
                    if *item == ItemKind::DiamondSword && *count >= 1 {
                        f.had_sword = true;
                    }
                }
                WorldEvent::Placed { actor, .. } if actor.as_str() == PLAYER_ID => f.placed_blocks += 1,
                WorldEvent::Moved { id, to, .. } if id.as_str() == PLAYER_ID => {
                    if f.placed_blocks >= 1 && in_island_region(*to) {
                        f.reached_island = true;
                    }
                }
                WorldEvent::AreaCleared { npc, mob: EntityKind::Spider } if npc.as_str() == ALARIC_ID => {
                    f.spiders_cleared = true;
                }
                WorldEvent::Transferred { from, to, item: ItemKind::DiamondSword }
                    if from.as_str() == PLAYER_ID && to.as_str() == ALARIC_ID =>
                {
                    f.sword_returned = true;
                }
                _ => {}
            },
        }

        for step in QuestStep::ALL {
            if self.completed.contains_key(&step) {
                continue;
            }
            if !self.facts.holds(step) {
                break;
            }
            self.completed.insert(step, at);
            update.completed.push(step);
        }

        if let QuestInput::World(WorldEvent::Death { id, .. }) = input {
            let who = match id.as_str() {
                ALARIC_ID => Some("Alaric died"),
                PLAYER_ID => Some("the player died"),
                _ => None,
            };
            if let (Some(reason), Some(step)) = (who, self.next_step()) {
                let failure = QuestFailure { step, reason: reason.to_string() };
                self.failed = Some(failure.clone());
                update.failed = Some(failure);
            }
        }
        update
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Position;

    fn id(s: &str) -> EntityId {
        EntityId::new(s)
    }

    fn at(turn: u32) -> Stamp {
        Stamp { turn, tick: turn as u64 * 10 }
    }

    fn talk(npc: &str) -> QuestInput {
        QuestInput::Exchange { npc: id(npc) }
    }

    fn world(e: WorldEvent) -> QuestInput {
        QuestInput::World(e)
    }

    fn full_run() -> Vec<QuestInput> {
        vec![
            talk(ELENA_ID),
            world(WorldEvent::InventoryChanged { id: id(PLAYER_ID), item: ItemKind::Cobblestone, count: 64 }),
            world(WorldEvent::Placed { actor: id(PLAYER_ID), block: crate::world::BlockKind::Cobblestone, position: Position::new(19, 5, 28) }),
            world(WorldEvent::Moved { id: id(PLAYER_ID), from: Position::new(19, 31, 28), to: Position::new(20, 31, 28) }),
            world(WorldEvent::AreaCleared { npc: id(ALARIC_ID), mob: EntityKind::Spider }),
            talk(ALARIC_ID),
            world(WorldEvent::InventoryChanged { id: id(PLAYER_ID), item: ItemKind::DiamondSword, count: 1 }),
            world(WorldEvent::Transferred { from: id(PLAYER_ID), to: id(ALARIC_ID), item: ItemKind::DiamondSword }),
        ]
    }

    #[test]
    fn letters_and_order() {
        let letters: String = QuestStep::ALL.iter().map(|s| s.letter()).collect();
        assert_eq!(letters, "abcdefg");
        assert!(QuestStep::TalkElena < QuestStep::GiveSword);
    }

    #[test]
    fn full_walkthrough_stamps_every_step() {
        let mut p = QuestProgress::new();
        for (i, input) in full_run().iter().enumerate() {
            p.observe(input, at(i as u32 + 1));
        }
        assert!(p.quest_complete());
        assert_eq!(p.stamp(QuestStep::TalkElena), Some(at(1)));
        assert_eq!(p.stamp(QuestStep::BuildPath), Some(at(4)));
        assert_eq!(p.stamp(QuestStep::GiveSword), Some(at(8)));
    }

    #[test]
    fn later_steps_wait_for_earlier_ones() {
        let mut p = QuestProgress::new();
        let sword = world(WorldEvent::InventoryChanged { id: id(PLAYER_ID), item: ItemKind::DiamondSword, count: 1 });
        assert!(p.observe(&sword, at(1)).completed.is_empty());
        assert!(p.completed_steps().is_empty());
        let u = p.observe(&talk(ELENA_ID), at(2));
        assert_eq!(u.completed, [QuestStep::TalkElena]);
    }

    #[test]
    fn island_without_building_does_not_count() {
        let mut p = QuestProgress::new();
        p.observe(&talk(ELENA_ID), at(1));
        p.observe(&world(WorldEvent::InventoryChanged { id: id(PLAYER_ID), item: ItemKind::Dirt, count: 16 }), at(2));
        let u = p.observe(
            &world(WorldEvent::Moved { id: id(PLAYER_ID), from: Position::new(20, 31, 21), to: Position::new(21, 31, 21) }),
            at(3),
        );
        assert!(u.completed.is_empty());
        assert_eq!(p.next_step(), Some(QuestStep::BuildPath));
    }

    #[test]
    fn stamps_are_idempotent() {
        let mut p = QuestProgress::new();
        for (i, input) in full_run().iter().enumerate() {
            p.observe(input, at(i as u32 + 1));
        }
        let before = p.clone();
        for input in full_run() {
            assert!(p.observe(&input, at(99)).completed.is_empty());
        }
        assert_eq!(p, before);
    }

    #[test]
    fn alaric_dying_fails_the_quest() {
        let mut p = QuestProgress::new();
        let run = full_run();
        for (i, input) in run[..4].iter().enumerate() {
            p.observe(input, at(i as u32 + 1));
        }
        let death = world(WorldEvent::Death { id: id(ALARIC_ID), kind: EntityKind::Npc, position: Position::new(28, 31, 28) });
        let u = p.observe(&death, at(5));
        assert_eq!(u.failed.as_ref().map(|f| f.step), Some(QuestStep::FightSpiders));
        for input in &run[4..] {
            assert!(p.observe(input, at(6)).completed.is_empty());
        }
        assert!(!p.quest_complete());
    }
}
