use serde::{Deserialize, Serialize};

use super::constants::{CREEPER_HEALTH, NPC_HEALTH, PLAYER_HEALTH, SPIDER_HEALTH, ZOMBIE_HEALTH};
use super::inventory::Inventory;
use super::types::{EntityId, EntityKind, ItemKind, Position};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub kind: EntityKind,
    pub name: String,
    pub position: Position,
    pub health: u32,
    pub equipped: Option<ItemKind>,
    pub inventory: Inventory,
    #[serde(default)]
    pub behavior: Behavior,
}

/// Per-entity control state driven by `tick`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Behavior {
    /// NPC keeps walking after the player.
    pub follow_player: bool,
    /// NPC keeps striking this mob every tick while it is in range.
    pub engaged: Option<EntityId>,
    /// Mob's current aggro target.
    pub target: Option<EntityId>,
    /// Where an idle mob wanders around.
    pub home: Option<Position>,
}

impl Entity {
    pub fn new(id: impl Into<String>, kind: EntityKind, name: impl Into<String>, position: Position) -> Self {
        let health = match kind {
            EntityKind::Player => PLAYER_HEALTH,
            EntityKind::Npc => NPC_HEALTH,
            EntityKind::Spider => SPIDER_HEALTH,
            EntityKind::Zombie => ZOMBIE_HEALTH,
            EntityKind::Creeper => CREEPER_HEALTH,
        };
        let behavior = Behavior {
            home: kind.is_mob().then_some(position),
            ..Behavior::default()
        };
        Entity {
            id: EntityId::new(id),
            kind,
            name: name.into(),
            position,
            health,
            equipped: None,
            inventory: Inventory::new(),
            behavior,
        }
    }

    pub fn with_inventory(mut self, inventory: Inventory) -> Self {
        self.inventory = inventory;
        self
    }

    pub fn is_alive(&self) -> bool {
        self.health > 0
    }
}
