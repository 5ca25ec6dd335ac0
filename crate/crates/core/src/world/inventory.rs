use serde::{Deserialize, Serialize};

use super::types::ItemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemStack {
    pub item: ItemKind,
    pub count: u32,
}

/// A multiset of items that remembers the order kinds were first added.
///
/// Chest listings are rendered in that order, so a chest filled with a stone
/// pickaxe and then cobblestone reads "1 stone_pickaxe, 64 cobblestone".
/// Stacks never hold a zero count.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Inventory(Vec<ItemStack>);

impl Inventory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_items(items: &[(ItemKind, u32)]) -> Self {
        let mut inv = Inventory::new();
        for &(item, count) in items {
            inv.add(item, count);
        }
        inv
    }

    pub fn count(&self, item: ItemKind) -> u32 {
        self.0.iter().find(|s| s.item == item).map_or(0, |s| s.count)
    }

    pub fn contains(&self, item: ItemKind) -> bool {
        self.count(item) > 0
    }

    pub fn add(&mut self, item: ItemKind, count: u32) {
        if count == 0 {
            return;
        }
        match self.0.iter_mut().find(|s| s.item == item) {
            Some(stack) => stack.count += count,
            None => self.0.push(ItemStack { item, count }),
        }
    }

    /// Removes `count` items, or nothing at all if fewer are held.
    pub fn remove(&mut self, item: ItemKind, count: u32) -> bool {
        let Some(idx) = self.0.iter().position(|s| s.item == item) else {
            return false;
        };
        if self.0[idx].count < count {
            return false;
        }
        self.0[idx].count -= count;
        if self.0[idx].count == 0 {
            self.0.remove(idx);
        }
        true
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|s| u64::from(s.count)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn stacks(&self) -> &[ItemStack] {
        &self.0
    }

    pub fn take_all(&mut self) -> Inventory {
        std::mem::take(self)
    }

    /// "1 wheat_seeds, 1 splash_potion" style listing; "empty" when bare.
    pub fn describe(&self) -> String {
        if self.0.is_empty() {
            return "empty".to_string();
        }
        self.0
            .iter()
            .map(|s| format!("{} {}", s.count, s.item))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn describe_keeps_insertion_order() {
        let inv = Inventory::from_items(&[(ItemKind::StonePickaxe, 1), (ItemKind::Cobblestone, 64)]);
        assert_eq!(inv.describe(), "1 stone_pickaxe, 64 cobblestone");
        let inv = Inventory::from_items(&[(ItemKind::WheatSeeds, 1), (ItemKind::SplashPotion, 1)]);
        assert_eq!(inv.describe(), "1 wheat_seeds, 1 splash_potion");
        assert_eq!(Inventory::new().describe(), "empty");
    }

    #[test]
    fn remove_is_all_or_nothing() {
        let mut inv = Inventory::from_items(&[(ItemKind::Stick, 2)]);
        assert!(!inv.remove(ItemKind::Stick, 3));
        assert_eq!(inv.count(ItemKind::Stick), 2);
        assert!(inv.remove(ItemKind::Stick, 2));
        assert!(inv.is_empty());
        assert!(!inv.remove(ItemKind::Stick, 1));
    }
}
