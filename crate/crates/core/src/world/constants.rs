//! Geometry and combat tuning for the quest world. Every range below is a
//! Chebyshev radius in blocks (see [`Position::reach`]).

use super::types::Position;

pub const WORLD_WIDTH: i32 = 64;
pub const WORLD_HEIGHT: i32 = 48;
pub const WORLD_DEPTH: i32 = 64;

/// Top layer of the village terrain; characters stand one block above it.
pub const VILLAGE_GROUND_Y: i32 = 4;
/// Anything below this height counts as the village.
pub const VILLAGE_CEILING_Y: i32 = 16;

pub const ISLAND_Y: i32 = 30;
pub const ISLAND_MIN_X: i32 = 20;
pub const ISLAND_MIN_Z: i32 = 20;
pub const ISLAND_SIZE: i32 = 24;

pub const MOB_DAMAGE: u32 = 2;
pub const ATTACK_DAMAGE: u32 = 4;

pub const PLAYER_HEALTH: u32 = 20;
pub const NPC_HEALTH: u32 = 20;
pub const SPIDER_HEALTH: u32 = 8;
pub const ZOMBIE_HEALTH: u32 = 12;
pub const CREEPER_HEALTH: u32 = 10;

pub const AGGRO_RADIUS: i32 = 8;
pub const MOB_ATTACK_RANGE: i32 = 1;
pub const MINE_RADIUS: i32 = 6;
pub const ATTACK_RADIUS: i32 = 3;
pub const TRANSFER_RADIUS: i32 = 3;
pub const CHEST_RADIUS: i32 = 4;
/// Idle mobs wander at most this far from where they spawned.
pub const LEASH_RADIUS: i32 = 1;
/// Mob deaths inside this radius of an NPC can clear the NPC's surroundings.
pub const GUARD_RADIUS: i32 = 10;

pub const GO_TO_PLAYER_MAX_TICKS: u32 = 50;
pub const GO_TO_PLAYER_ARRIVAL: i32 = 2;
pub const FOLLOW_DISTANCE: i32 = 2;

/// Chance, out of `IDLE_WANDER_ODDS`, that an idle mob takes a step.
pub const IDLE_WANDER_ODDS: u32 = 4;
/// Length of each day and each night.
pub const HALF_DAY_TICKS: u64 = 600;

pub const PLAYER_SPAWN: Position = Position::new(32, 5, 13);
pub const ELENA_SPAWN: Position = Position::new(32, 5, 10);
pub const ALARIC_SPAWN: Position = Position::new(28, 31, 28);
pub const VILLAGE_CHEST: Position = Position::new(34, 5, 10);
pub const HOUSE_CHEST: Position = Position::new(31, 5, 4);
pub const ISLAND_CHEST: Position = Position::new(30, 31, 28);
pub const SWORD_CHEST: Position = Position::new(40, 31, 40);

pub fn in_bounds(p: Position) -> bool {
    (0..WORLD_WIDTH).contains(&p.x) && (0..WORLD_HEIGHT).contains(&p.y) && (0..WORLD_DEPTH).contains(&p.z)
}

/// The island region: the platform footprint, from the platform upward.
pub fn in_island_region(p: Position) -> bool {
    (ISLAND_MIN_X..ISLAND_MIN_X + ISLAND_SIZE).contains(&p.x)
        && (ISLAND_MIN_Z..ISLAND_MIN_Z + ISLAND_SIZE).contains(&p.z)
        && (ISLAND_Y..WORLD_HEIGHT).contains(&p.y)
}

pub fn in_village_region(p: Position) -> bool {
    in_bounds(p) && p.y < VILLAGE_CEILING_Y
}

/// Named places an NPC can point at.
pub fn landmark(name: &str) -> Option<Position> {
    match name {
        "village" => Some(Position::new(32, VILLAGE_GROUND_Y + 1, 16)),
        "island" => Some(Position::new(
            ISLAND_MIN_X + ISLAND_SIZE / 2,
            ISLAND_Y + 1,
            ISLAND_MIN_Z + ISLAND_SIZE / 2,
        )),
        _ => None,
    }
}
