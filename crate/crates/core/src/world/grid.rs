use std::collections::BTreeMap;

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::types::{BlockKind, Position};

/// Dense block storage, serialized as run-length encoded `[kind, run]` pairs
/// walked in x, then z, then y order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    width: i32,
    height: i32,
    depth: i32,
    cells: Vec<BlockKind>,
}

impl BlockGrid {
    pub fn filled(width: i32, height: i32, depth: i32, kind: BlockKind) -> Self {
        let len = (width * height * depth) as usize;
        BlockGrid { width, height, depth, cells: vec![kind; len] }
    }

    pub fn size(&self) -> (i32, i32, i32) {
        (self.width, self.height, self.depth)
    }

    pub fn contains(&self, p: Position) -> bool {
        (0..self.width).contains(&p.x) && (0..self.height).contains(&p.y) && (0..self.depth).contains(&p.z)
    }

    fn index(&self, p: Position) -> usize {
        ((p.y * self.depth + p.z) * self.width + p.x) as usize
    }

    /// Out-of-bounds cells read as air.
    pub fn get(&self, p: Position) -> BlockKind {
        if self.contains(p) {
            self.cells[self.index(p)]
        } else {
            BlockKind::Air
        }
    }

    pub fn set(&mut self, p: Position, kind: BlockKind) {
        if self.contains(p) {
            let idx = self.index(p);
            self.cells[idx] = kind;
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = Position> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.depth).flat_map(move |z| (0..self.width).map(move |x| Position::new(x, y, z)))
        })
    }

    pub fn count(&self, kind: BlockKind) -> usize {
        self.cells.iter().filter(|&&b| b == kind).count()
    }
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    size: [i32; 3],
    runs: Vec<(BlockKind, u32)>,
}

impl Serialize for BlockGrid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut runs: Vec<(BlockKind, u32)> = Vec::new();
        for &cell in &self.cells {
            match runs.last_mut() {
                Some((kind, n)) if *kind == cell => *n += 1,
                _ => runs.push((cell, 1)),
            }
        }
        GridRepr { size: [self.width, self.height, self.depth], runs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BlockGrid {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = GridRepr::deserialize(deserializer)?;
        let [width, height, depth] = repr.size;
        let mut cells = Vec::with_capacity((width * height * depth).max(0) as usize);
        for (kind, n) in repr.runs {
            cells.extend(std::iter::repeat_n(kind, n as usize));
        }
        if cells.len() != (width * height * depth) as usize {
            return Err(D::Error::custom("block runs do not cover the grid"));
        }
        Ok(BlockGrid { width, height, depth, cells })
    }
}

/// A position-keyed map that serializes as a list of `[position, value]`
/// pairs, since JSON object keys must be strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosMap<V>(pub BTreeMap<Position, V>);

impl<V> Default for PosMap<V> {
    fn default() -> Self {
        PosMap(BTreeMap::new())
    }
}

impl<V: Serialize> Serialize for PosMap<V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter())
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for PosMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs: Vec<(Position, V)> = Vec::deserialize(deserializer)?;
        Ok(PosMap(pairs.into_iter().collect()))
    }
}

/// The world's seeded generator. Its full state is part of the snapshot so
/// that a serialized world resumes with the same random stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldRng(ChaCha8Rng);

impl WorldRng {
    pub fn from_seed(seed: u64) -> Self {
        WorldRng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u32) -> u32 {
        self.0.next_u32() % n
    }
}

#[derive(Serialize, Deserialize)]
struct RngRepr {
    key: String,
    stream: u64,
    word_pos: String,
}

impl Serialize for WorldRng {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RngRepr {
            key: hex::encode(self.0.get_seed()),
            stream: self.0.get_stream(),
            word_pos: self.0.get_word_pos().to_string(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WorldRng {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = RngRepr::deserialize(deserializer)?;
        let key: [u8; 32] = hex::decode(&repr.key)
            .map_err(D::Error::custom)?
            .try_into()
            .map_err(|_| D::Error::custom("rng key must be 32 bytes"))?;
        let word_pos: u128 = repr.word_pos.parse().map_err(D::Error::custom)?;
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(repr.stream);
        rng.set_word_pos(word_pos);
        Ok(WorldRng(rng))
    }
}
