use serde::{Deserialize, Serialize};

use super::inventory::Inventory;
use super::types::{BlockKind, EntityId, EntityKind, ItemKind, Position, TimeOfDay};

/// Everything observable that happens in the world. Quest tracking and the
/// session log are built entirely from these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WorldEvent {
    Moved { id: EntityId, from: Position, to: Position },
    Damage { target: EntityId, attacker: EntityId, amount: u32, health: u32 },
    Death { id: EntityId, kind: EntityKind, position: Position },
    Mined { actor: EntityId, block: BlockKind, position: Position },
    Placed { actor: EntityId, block: BlockKind, position: Position },
    Dropped { actor: EntityId, item: ItemKind, position: Position },
    PickedUp { id: EntityId, item: ItemKind, count: u32, position: Position },
    Transferred { from: EntityId, to: EntityId, item: ItemKind },
    ChestOpened { actor: EntityId, position: Position, items: Inventory },
    /// New total of `item` held by `id` after any inventory change.
    InventoryChanged { id: EntityId, item: ItemKind, count: u32 },
    Equipped { id: EntityId, item: ItemKind },
    Pointed { actor: EntityId, location: String },
    /// The last living mob of `mob` near `npc` has died.
    AreaCleared { npc: EntityId, mob: EntityKind },
    TimeChanged { time: TimeOfDay },
    Slept { id: EntityId },
}

impl WorldEvent {
    /// The entity that performed this event, if any.
    pub fn actor(&self) -> Option<&EntityId> {
        match self {
            WorldEvent::Moved { id, .. }
            | WorldEvent::PickedUp { id, .. }
            | WorldEvent::Equipped { id, .. }
            | WorldEvent::Slept { id, .. } => Some(id),
            WorldEvent::Damage { attacker, .. } => Some(attacker),
            WorldEvent::Mined { actor, .. }
            | WorldEvent::Placed { actor, .. }
            | WorldEvent::Dropped { actor, .. }
            | WorldEvent::ChestOpened { actor, .. }
            | WorldEvent::Pointed { actor, .. } => Some(actor),
            WorldEvent::Transferred { from, .. } => Some(from),
            WorldEvent::Death { .. }
            | WorldEvent::InventoryChanged { .. }
            | WorldEvent::AreaCleared { .. }
            | WorldEvent::TimeChanged { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickedEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub event: WorldEvent,
}
