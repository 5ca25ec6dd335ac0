use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Declares a fieldless enum whose wire name is its snake_case spelling,
/// together with `as_str`, `FromStr`, `Display` and an `ALL` table.
macro_rules! named_enum {
    (
        $(#[$meta:meta])*
        pub enum $name:ident { $($variant:ident => $text:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = UnknownName;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(UnknownName(other.to_string())),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

named_enum! {
    pub enum BlockKind {
        Air => "air",
        Dirt => "dirt",
        Cobblestone => "cobblestone",
        Stone => "stone",
        OakLog => "oak_log",
        Bedrock => "bedrock",
    }
}

impl BlockKind {
    /// Only these four kinds can ever be mined; bedrock is immutable.
    pub fn is_mineable(self) -> bool {
        matches!(
            self,
            BlockKind::Dirt | BlockKind::Cobblestone | BlockKind::Stone | BlockKind::OakLog
        )
    }

    pub fn is_solid(self) -> bool {
        self != BlockKind::Air
    }

    /// The item a mined block turns into.
    pub fn item(self) -> Option<ItemKind> {
        match self {
            BlockKind::Dirt => Some(ItemKind::Dirt),
            BlockKind::Cobblestone => Some(ItemKind::Cobblestone),
            BlockKind::Stone => Some(ItemKind::Stone),
            BlockKind::OakLog => Some(ItemKind::OakLog),
            BlockKind::Air | BlockKind::Bedrock => None,
        }
    }
}

named_enum! {
    pub enum ItemKind {
        Dirt => "dirt",
        Cobblestone => "cobblestone",
        Stone => "stone",
        OakLog => "oak_log",
        WheatSeeds => "wheat_seeds",
        SplashPotion => "splash_potion",
        IronPickaxe => "iron_pickaxe",
        StonePickaxe => "stone_pickaxe",
        IronSword => "iron_sword",
        DiamondSword => "diamond_sword",
        NetheriteSword => "netherite_sword",
        Stick => "stick",
        Bed => "bed",
    }
}

impl ItemKind {
    /// The block an item places as, for the placeable building materials.
    pub fn block(self) -> Option<BlockKind> {
        match self {
            ItemKind::Dirt => Some(BlockKind::Dirt),
            ItemKind::Cobblestone => Some(BlockKind::Cobblestone),
            ItemKind::Stone => Some(BlockKind::Stone),
            ItemKind::OakLog => Some(BlockKind::OakLog),
            _ => None,
        }
    }

    pub fn is_placeable(self) -> bool {
        self.block().is_some()
    }
}

named_enum! {
    pub enum EntityKind {
        Player => "player",
        Npc => "npc",
        Spider => "spider",
        Zombie => "zombie",
        Creeper => "creeper",
    }
}

impl EntityKind {
    pub fn is_mob(self) -> bool {
        matches!(self, EntityKind::Spider | EntityKind::Zombie | EntityKind::Creeper)
    }

    /// Entities that carry inventories and pick up ground items.
    pub fn is_character(self) -> bool {
        matches!(self, EntityKind::Player | EntityKind::Npc)
    }
}

named_enum! {
    pub enum TimeOfDay {
        Day => "day",
        Night => "night",
    }
}

named_enum! {
    /// Compass directions map onto the horizontal axes: north is -z, east is +x.
    pub enum Direction {
        North => "north",
        South => "south",
        East => "east",
        West => "west",
        Up => "up",
        Down => "down",
    }
}

impl Direction {
    pub fn offset(self) -> (i32, i32, i32) {
        match self {
            Direction::North => (0, 0, -1),
            Direction::South => (0, 0, 1),
            Direction::East => (1, 0, 0),
            Direction::West => (-1, 0, 0),
            Direction::Up => (0, 1, 0),
            Direction::Down => (0, -1, 0),
        }
    }

    pub fn is_horizontal(self) -> bool {
        !matches!(self, Direction::Up | Direction::Down)
    }
}

/// Integer block coordinates; one unit is one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Position {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Position { x, y, z }
    }

    pub fn offset(self, dx: i32, dy: i32, dz: i32) -> Self {
        Position::new(self.x + dx, self.y + dy, self.z + dz)
    }

    pub fn below(self) -> Self {
        self.offset(0, -1, 0)
    }

    pub fn above(self) -> Self {
        self.offset(0, 1, 0)
    }

    /// Range metric used for every radius check in the simulator.
    pub fn reach(self, other: Position) -> i32 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn manhattan(self, other: Position) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs() + (self.z - other.z).abs()
    }

    pub fn dist2(self, other: Position) -> i64 {
        let dx = i64::from(self.x - other.x);
        let dy = i64::from(self.y - other.y);
        let dz = i64::from(self.z - other.z);
        dx * dx + dy * dy + dz * dz
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        EntityId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        EntityId(s.to_string())
    }
}
