//! Deterministic, seeded, tick-based voxel world: a village on the ground and
//! a floating island high above it, with mobs, chests and inventories.
//!
//! All mutation goes through `&mut WorldState`; events produced by actions are
//! queued in an outbox and drained with [`WorldState::take_events`], while
//! [`WorldState::tick`] returns the events of that tick directly.

pub mod constants;
mod entity;
mod event;
mod grid;
mod inventory;
mod ops;
mod tick;
mod types;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use entity::{Behavior, Entity};
pub use event::{TickedEvent, WorldEvent};
pub use grid::{BlockGrid, PosMap, WorldRng};
pub use inventory::{Inventory, ItemStack};
pub use types::{BlockKind, Direction, EntityId, EntityKind, ItemKind, Position, TimeOfDay, UnknownName};

use constants::*;

/// Movement confinement for an NPC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Village,
    Island,
}

impl Region {
    pub fn contains(self, p: Position) -> bool {
        match self {
            Region::Village => in_village_region(p),
            Region::Island => in_island_region(p),
        }
    }
}

/// Result of a world action: success, or a non-empty failure text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub ok: bool,
    pub text: String,
}

impl ActionOutcome {
    pub fn success(text: impl Into<String>) -> Self {
        ActionOutcome { ok: true, text: text.into() }
    }

    pub fn failure(text: impl Into<String>) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty());
        ActionOutcome { ok: false, text }
    }
}

pub const PLAYER_ID: &str = "player";
pub const ELENA_ID: &str = "elena";
pub const ALARIC_ID: &str = "alaric";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub seed: u64,
    pub tick: u64,
    pub time_of_day: TimeOfDay,
    /// Ticks into the current day/night cycle.
    pub day_clock: u64,
    pub blocks: BlockGrid,
    pub entities: BTreeMap<EntityId, Entity>,
    pub chests: PosMap<Inventory>,
    /// Dropped items lying on the ground.
    pub ground: PosMap<Inventory>,
    pub regions: BTreeMap<EntityId, Region>,
    /// (npc, mob kind) pairs for which `AreaCleared` already fired.
    pub cleared: BTreeSet<(EntityId, EntityKind)>,
    rng: WorldRng,
    #[serde(skip)]
    outbox: Vec<TickedEvent>,
}

/// Builds the quest world for `seed`. Identical seeds give identical worlds.
pub fn create_world(seed: u64) -> WorldState {
    let mut rng = WorldRng::from_seed(seed);
    let mut blocks = BlockGrid::filled(WORLD_WIDTH, WORLD_HEIGHT, WORLD_DEPTH, BlockKind::Air);

    for x in 0..WORLD_WIDTH {
        for z in 0..WORLD_DEPTH {
            blocks.set(Position::new(x, 0, z), BlockKind::Bedrock);
            for y in 1..VILLAGE_GROUND_Y {
                blocks.set(Position::new(x, y, z), BlockKind::Stone);
            }
            blocks.set(Position::new(x, VILLAGE_GROUND_Y, z), BlockKind::Dirt);
        }
    }

    // Elena's house, door facing south towards the square.
    build_house(&mut blocks, 29, 2, 7, 6);
    build_house(&mut blocks, 8, 40, 7, 7);
    build_house(&mut blocks, 48, 40, 7, 7);
    build_house(&mut blocks, 48, 4, 7, 6);
    build_tree(&mut blocks, 37, 13);
    build_tree(&mut blocks, 44, 18);

    // Outskirts vary with the seed; the square and the climbing spot under
    // the island's west edge stay clear.
    for _ in 0..10 {
        let x = if rng.below(2) == 0 { rng.below(14) as i32 + 1 } else { rng.below(12) as i32 + 51 };
        let z = rng.below(60) as i32 + 2;
        if rng.below(3) == 0 {
            blocks.set(Position::new(x, VILLAGE_GROUND_Y + 1, z), BlockKind::Cobblestone);
        } else {
            build_tree(&mut blocks, x, z);
        }
    }

    for x in ISLAND_MIN_X..ISLAND_MIN_X + ISLAND_SIZE {
        for z in ISLAND_MIN_Z..ISLAND_MIN_Z + ISLAND_SIZE {
            let kind = if (x + z) % 7 == 0 { BlockKind::Cobblestone } else { BlockKind::Stone };
            blocks.set(Position::new(x, ISLAND_Y, z), kind);
        }
    }

    let mut entities = BTreeMap::new();
    let mut add = |e: Entity| {
        entities.insert(e.id.clone(), e);
    };
    add(Entity::new(PLAYER_ID, EntityKind::Player, "Player", PLAYER_SPAWN));
    add(Entity::new(ELENA_ID, EntityKind::Npc, "Elena", ELENA_SPAWN).with_inventory(Inventory::from_items(&[
        (ItemKind::IronPickaxe, 1),
        (ItemKind::SplashPotion, 1),
    ])));
    add(Entity::new(ALARIC_ID, EntityKind::Npc, "Alaric", ALARIC_SPAWN).with_inventory(Inventory::from_items(&[
        (ItemKind::IronSword, 1),
        (ItemKind::Stick, 4),
        (ItemKind::NetheriteSword, 1),
    ])));
    let spiders = [Position::new(38, 31, 26), Position::new(26, 31, 38), Position::new(38, 31, 36)];
    for (i, pos) in spiders.into_iter().enumerate() {
        add(Entity::new(format!("spider-{}", i + 1), EntityKind::Spider, "spider", pos));
    }
    let zombies = [Position::new(38, 31, 40), Position::new(40, 31, 38)];
    for (i, pos) in zombies.into_iter().enumerate() {
        add(Entity::new(format!("zombie-{}", i + 1), EntityKind::Zombie, "zombie", pos));
    }

    let mut chests = PosMap::default();
    chests.0.insert(VILLAGE_CHEST, Inventory::from_items(&[(ItemKind::StonePickaxe, 1), (ItemKind::Cobblestone, 64)]));
    chests.0.insert(HOUSE_CHEST, Inventory::from_items(&[(ItemKind::Bed, 1), (ItemKind::WheatSeeds, 3)]));
    chests.0.insert(ISLAND_CHEST, Inventory::from_items(&[(ItemKind::Stick, 2), (ItemKind::IronPickaxe, 1)]));
    chests.0.insert(SWORD_CHEST, Inventory::from_items(&[(ItemKind::DiamondSword, 1)]));

    let regions = BTreeMap::from([
        (EntityId::new(ELENA_ID), Region::Village),
        (EntityId::new(ALARIC_ID), Region::Island),
    ]);

    WorldState {
        seed,
        tick: 0,
        time_of_day: TimeOfDay::Day,
        day_clock: 0,
        blocks,
        entities,
        chests,
        ground: PosMap::default(),
        regions,
        cleared: BTreeSet::new(),
        rng,
        outbox: Vec::new(),
    }
}

fn build_house(blocks: &mut BlockGrid, x0: i32, z0: i32, width: i32, depth: i32) {
    let (x1, z1) = (x0 + width - 1, z0 + depth - 1);
    let door_x = x0 + width / 2;
    for y in VILLAGE_GROUND_Y + 1..=VILLAGE_GROUND_Y + 3 {
        for x in x0..=x1 {
            for z in z0..=z1 {
                let wall = x == x0 || x == x1 || z == z0 || z == z1;
                let door = z == z1 && x == door_x && y <= VILLAGE_GROUND_Y + 2;
                if wall && !door {
                    blocks.set(Position::new(x, y, z), BlockKind::Cobblestone);
                }
            }
        }
    }
}

fn build_tree(blocks: &mut BlockGrid, x: i32, z: i32) {
    for y in VILLAGE_GROUND_Y + 1..=VILLAGE_GROUND_Y + 4 {
        blocks.set(Position::new(x, y, z), BlockKind::OakLog);
    }
}

impl WorldState {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(&EntityId::new(id))
    }

    pub fn entity_mut(&mut self, id: &str) -> Option<&mut Entity> {
        self.entities.get_mut(&EntityId::new(id))
    }

    pub fn entity_by_name(&self, name: &str) -> Option<&Entity> {
        self.entities.values().find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn player(&self) -> &Entity {
        self.entity(PLAYER_ID).expect("world always has a player")
    }

    pub fn block(&self, p: Position) -> BlockKind {
        self.blocks.get(p)
    }

    /// Sets a block directly. Scenario setup only; emits no events.
    pub fn set_block(&mut self, p: Position, kind: BlockKind) {
        self.blocks.set(p, kind);
    }

    /// Moves an entity directly. Scenario setup only; emits no events.
    pub fn teleport(&mut self, id: &str, to: Position) {
        if let Some(e) = self.entity_mut(id) {
            e.position = to;
            if e.kind.is_mob() {
                e.behavior.home = Some(to);
            }
        }
    }

    /// Adds a mob. Scenario setup only; emits no events.
    pub fn spawn_mob(&mut self, kind: EntityKind, position: Position) -> EntityId {
        let n = self.entities.values().filter(|e| e.kind == kind).count() + 1;
        let mut id = format!("{kind}-{n}");
        let mut bump = n;
        while self.entities.contains_key(&EntityId::new(id.as_str())) {
            bump += 1;
            id = format!("{kind}-{bump}");
        }
        let entity = Entity::new(id, kind, kind.as_str(), position);
        let id = entity.id.clone();
        self.entities.insert(id.clone(), entity);
        id
    }

    /// Removes every mob. Scenario setup only; emits no events.
    pub fn clear_mobs(&mut self) {
        self.entities.retain(|_, e| !e.kind.is_mob());
    }

    pub fn living_mobs(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values().filter(|e| e.kind.is_mob() && e.is_alive())
    }

    /// Drains events produced by actions since the last call.
    pub fn take_events(&mut self) -> Vec<TickedEvent> {
        std::mem::take(&mut self.outbox)
    }

    pub(crate) fn emit(&mut self, event: WorldEvent) {
        self.outbox.push(TickedEvent { tick: self.tick, event });
    }

    /// Total items held across inventories, chests and the ground.
    pub fn total_items(&self) -> u64 {
        let held: u64 = self.entities.values().map(|e| e.inventory.total()).sum();
        let chests: u64 = self.chests.0.values().map(Inventory::total).sum();
        let ground: u64 = self.ground.0.values().map(Inventory::total).sum();
        held + chests + ground
    }

    /// Canonical JSON with sorted object keys.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("world serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn region_of(&self, id: &EntityId) -> Option<Region> {
        self.regions.get(id).copied()
    }

    pub(crate) fn rng(&mut self) -> &mut WorldRng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn creation_matches_quest_layout() {
        let w = create_world(7);
        let player = w.player();
        let elena = w.entity(ELENA_ID).unwrap();
        let alaric = w.entity(ALARIC_ID).unwrap();
        assert!(player.position.reach(elena.position) <= 5);
        assert!(in_village_region(elena.position));
        assert!(in_island_region(alaric.position));
        assert!(alaric.position.y > elena.position.y);

        let spiders_near = w
            .living_mobs()
            .filter(|m| m.kind == EntityKind::Spider && m.position.reach(alaric.position) <= 10)
            .count();
        assert!(spiders_near >= 3);

        assert_eq!(elena.inventory.describe(), "1 iron_pickaxe, 1 splash_potion");
        assert_eq!(alaric.inventory.describe(), "1 iron_sword, 4 stick, 1 netherite_sword");
        assert_eq!(w.chests.0[&VILLAGE_CHEST].describe(), "1 stone_pickaxe, 64 cobblestone");
        assert_eq!(w.chests.0[&ISLAND_CHEST].describe(), "2 stick, 1 iron_pickaxe");
        assert!(ISLAND_CHEST.reach(alaric.position) <= CHEST_RADIUS);

        let sword = &w.chests.0[&SWORD_CHEST];
        assert_eq!(sword.count(ItemKind::DiamondSword), 1);
        assert_eq!(sword.total(), 1);
        let guards = w
            .living_mobs()
            .filter(|m| m.kind == EntityKind::Zombie && m.position.reach(SWORD_CHEST) <= 3)
            .count();
        assert!(guards >= 2);

        assert_eq!(w.entities.values().filter(|e| e.kind == EntityKind::Player).count(), 1);
        assert_eq!(w.entities.values().filter(|e| e.kind == EntityKind::Npc).count(), 2);
    }

    #[test]
    fn island_has_no_oak_log() {
        let w = create_world(7);
        let logs_on_island = w
            .blocks
            .positions()
            .filter(|&p| w.block(p) == BlockKind::OakLog && p.y >= ISLAND_Y)
            .count();
        assert_eq!(logs_on_island, 0);
    }

    #[test]
    fn same_seed_same_world() {
        assert_eq!(create_world(7).canonical_json(), create_world(7).canonical_json());
        assert_ne!(create_world(7).canonical_json(), create_world(8).canonical_json());
    }

    #[test]
    fn canonical_json_round_trips() {
        let w = create_world(11);
        let back: WorldState = serde_json::from_str(&w.canonical_json()).unwrap();
        assert_eq!(back, w);
    }
}
