use super::constants::*;
use super::{ActionOutcome, BlockKind, Direction, EntityId, EntityKind, Inventory, ItemKind, Position, TimeOfDay};
use super::{WorldEvent, WorldState};

impl WorldState {
    fn living_actor(&self, actor: &str) -> Result<Position, ActionOutcome> {
        match self.entity(actor) {
            None => Err(ActionOutcome::failure(format!("unknown entity {actor}"))),
            Some(e) if !e.is_alive() => Err(ActionOutcome::failure("cannot act while dead")),
            Some(e) => Ok(e.position),
        }
    }

    pub(crate) fn standable(&self, p: Position) -> bool {
        in_bounds(p) && p.y >= 1 && !self.block(p).is_solid() && self.block(p.below()).is_solid()
    }

    /// Where a horizontal step lands: level first, then one up, then one down.
    pub(crate) fn step_target(&self, from: Position, dir: Direction, dy_order: [i32; 3]) -> Option<Position> {
        let (dx, _, dz) = dir.offset();
        dy_order
            .into_iter()
            .map(|dy| from.offset(dx, dy, dz))
            .find(|&p| self.standable(p))
    }

    /// One greedy Manhattan-descent step toward `to`, trying the x axis before
    /// the z axis and, within a column, the height closest to the target first.
    pub(crate) fn greedy_step(&self, id: &EntityId, from: Position, to: Position) -> Option<Position> {
        let current = from.manhattan(to);
        let dy_order = match to.y.cmp(&from.y) {
            std::cmp::Ordering::Greater => [1, 0, -1],
            std::cmp::Ordering::Less => [-1, 0, 1],
            std::cmp::Ordering::Equal => [0, 1, -1],
        };
        let region = self.region_of(id);
        let mut dirs = Vec::with_capacity(2);
        if to.x != from.x {
            dirs.push(if to.x > from.x { Direction::East } else { Direction::West });
        }
        if to.z != from.z {
            dirs.push(if to.z > from.z { Direction::South } else { Direction::North });
        }
        for dir in dirs {
            let (dx, _, dz) = dir.offset();
            for dy in dy_order {
                let p = from.offset(dx, dy, dz);
                if self.standable(p)
                    && region.is_none_or(|r| r.contains(p))
                    && p.manhattan(to) < current
                {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Relocates an entity one step, emitting the move and any pickups.
    pub(crate) fn relocate(&mut self, id: &EntityId, to: Position) {
        let Some(entity) = self.entities.get_mut(id) else { return };
        let from = entity.position;
        entity.position = to;
        let picks_up = entity.kind.is_character();
        self.emit(WorldEvent::Moved { id: id.clone(), from, to });
        if picks_up {
            if let Some(items) = self.ground.0.remove(&to) {
                for stack in items.stacks() {
                    self.emit(WorldEvent::PickedUp { id: id.clone(), item: stack.item, count: stack.count, position: to });
                    self.give(id, stack.item, stack.count);
                }
            }
        }
    }

    fn give(&mut self, id: &EntityId, item: ItemKind, count: u32) {
        if let Some(e) = self.entities.get_mut(id) {
            e.inventory.add(item, count);
            let total = e.inventory.count(item);
            self.emit(WorldEvent::InventoryChanged { id: id.clone(), item, count: total });
        }
    }

    fn take(&mut self, id: &EntityId, item: ItemKind) -> bool {
        let Some(e) = self.entities.get_mut(id) else { return false };
        if !e.inventory.remove(item, 1) {
            return false;
        }
        let total = e.inventory.count(item);
        if total == 0 && e.equipped == Some(item) {
            e.equipped = None;
        }
        self.emit(WorldEvent::InventoryChanged { id: id.clone(), item, count: total });
        true
    }

    /// Mines the nearest block of `kind` within reach and pockets the item.
    pub fn mine_block(&mut self, actor: &str, kind: BlockKind) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        if !kind.is_mineable() {
            return ActionOutcome::failure(format!("cannot mine {kind}"));
        }
        let mut best: Option<Position> = None;
        for y in origin.y - MINE_RADIUS..=origin.y + MINE_RADIUS {
            for z in origin.z - MINE_RADIUS..=origin.z + MINE_RADIUS {
                for x in origin.x - MINE_RADIUS..=origin.x + MINE_RADIUS {
                    let p = Position::new(x, y, z);
                    if self.block(p) != kind {
                        continue;
                    }
                    let key = (p.dist2(origin), p);
                    if best.is_none_or(|b| key < (b.dist2(origin), b)) {
                        best = Some(p);
                    }
                }
            }
        }
        let Some(target) = best else {
            return ActionOutcome::failure(format!("no {kind} nearby"));
        };
        let id = EntityId::new(actor);
        self.blocks.set(target, BlockKind::Air);
        self.emit(WorldEvent::Mined { actor: id.clone(), block: kind, position: target });
        if let Some(item) = kind.item() {
            self.give(&id, item, 1);
        }
        ActionOutcome::success("mined successfully")
    }

    /// Drops one item at the actor's feet for anyone to walk over and collect.
    pub fn drop_item(&mut self, actor: &str, item: ItemKind) -> ActionOutcome {
        let at = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        let id = EntityId::new(actor);
        if !self.take(&id, item) {
            return ActionOutcome::failure(format!("do not have {item}"));
        }
        self.ground.0.entry(at).or_default().add(item, 1);
        self.emit(WorldEvent::Dropped { actor: id, item, position: at });
        ActionOutcome::success(format!("dropped {item}"))
    }

    /// Walks toward the player one block per tick until within arrival
    /// distance. The world keeps ticking while the NPC walks.
    pub fn go_to_player(&mut self, actor: &str) -> ActionOutcome {
        if let Err(fail) = self.living_actor(actor) {
            return fail;
        }
        let id = EntityId::new(actor);
        for _ in 0..GO_TO_PLAYER_MAX_TICKS {
            let (Some(me), player) = (self.entities.get(&id), self.player()) else { break };
            if !me.is_alive() || !player.is_alive() {
                break;
            }
            let (from, goal) = (me.position, player.position);
            if from.reach(goal) <= GO_TO_PLAYER_ARRIVAL {
                return ActionOutcome::success("reached player");
            }
            // Greedy descent is deterministic, so a blocked step stays blocked.
            let Some(next) = self.greedy_step(&id, from, goal) else { break };
            self.relocate(&id, next);
            let events = self.tick();
            self.outbox.extend(events);
        }
        match (self.entities.get(&id), self.player()) {
            (Some(me), player) if me.is_alive() && me.position.reach(player.position) <= GO_TO_PLAYER_ARRIVAL => {
                ActionOutcome::success("reached player")
            }
            _ => ActionOutcome::failure("could not reach player"),
        }
    }

    pub fn follow_player(&mut self, actor: &str) -> ActionOutcome {
        if let Err(fail) = self.living_actor(actor) {
            return fail;
        }
        if let Some(e) = self.entity_mut(actor) {
            e.behavior.follow_player = true;
        }
        ActionOutcome::success("following player")
    }

    pub fn point_to_location(&mut self, actor: &str, location: &str) -> ActionOutcome {
        if let Err(fail) = self.living_actor(actor) {
            return fail;
        }
        if landmark(location).is_none() {
            return ActionOutcome::failure(format!("unknown location {location}"));
        }
        self.emit(WorldEvent::Pointed { actor: EntityId::new(actor), location: location.to_string() });
        ActionOutcome::success(format!("pointed to {location}"))
    }

    pub fn equip_item(&mut self, actor: &str, item: ItemKind) -> ActionOutcome {
        if let Err(fail) = self.living_actor(actor) {
            return fail;
        }
        let Some(e) = self.entity_mut(actor) else {
            return ActionOutcome::failure(format!("unknown entity {actor}"));
        };
        if !e.inventory.contains(item) {
            return ActionOutcome::failure(format!("do not have {item}"));
        }
        e.equipped = Some(item);
        self.emit(WorldEvent::Equipped { id: EntityId::new(actor), item });
        ActionOutcome::success(format!("equipped {item}"))
    }

    fn nearest_mob(&self, origin: Position, radius: i32, pred: impl Fn(&super::Entity) -> bool) -> Option<EntityId> {
        self.living_mobs()
            .filter(|m| m.position.reach(origin) <= radius && pred(m))
            .min_by_key(|m| (m.position.reach(origin), m.position.dist2(origin), m.id.clone()))
            .map(|m| m.id.clone())
    }

    /// One blow against a specific entity; handles death bookkeeping.
    pub(crate) fn hit(&mut self, attacker: &EntityId, target: &EntityId, amount: u32) {
        let Some(victim) = self.entities.get_mut(target) else { return };
        if !victim.is_alive() {
            return;
        }
        victim.health = victim.health.saturating_sub(amount);
        let (health, kind, position) = (victim.health, victim.kind, victim.position);
        self.emit(WorldEvent::Damage { target: target.clone(), attacker: attacker.clone(), amount, health });
        if health == 0 {
            if let Some(v) = self.entities.get_mut(target) {
                v.behavior = super::Behavior::default();
            }
            self.emit(WorldEvent::Death { id: target.clone(), kind, position });
            if kind.is_mob() {
                self.check_cleared(kind, position);
            }
        }
    }

    fn check_cleared(&mut self, mob: EntityKind, died_at: Position) {
        let npcs: Vec<(EntityId, Position)> = self
            .entities
            .values()
            .filter(|e| e.kind == EntityKind::Npc && e.is_alive())
            .map(|e| (e.id.clone(), e.position))
            .collect();
        for (npc, at) in npcs {
            if died_at.reach(at) > GUARD_RADIUS || self.cleared.contains(&(npc.clone(), mob)) {
                continue;
            }
            let remaining = self.living_mobs().any(|m| m.kind == mob && m.position.reach(at) <= GUARD_RADIUS);
            if !remaining {
                self.cleared.insert((npc.clone(), mob));
                self.emit(WorldEvent::AreaCleared { npc, mob });
            }
        }
    }

    /// A single strike at the nearest living mob of `kind` in attack range.
    pub fn strike(&mut self, actor: &str, kind: EntityKind) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        if !kind.is_mob() {
            return ActionOutcome::failure(format!("cannot attack {kind}"));
        }
        let Some(target) = self.nearest_mob(origin, ATTACK_RADIUS, |m| m.kind == kind) else {
            return ActionOutcome::failure(format!("no {kind} nearby"));
        };
        self.hit(&EntityId::new(actor), &target, ATTACK_DAMAGE);
        if self.entities[&target].is_alive() {
            ActionOutcome::success(format!("attacked {kind}"))
        } else {
            ActionOutcome::success(format!("killed {kind}"))
        }
    }

    /// Strikes now and keeps fighting the same mob on later ticks while it
    /// stays in range.
    pub fn attack_entity(&mut self, actor: &str, kind: EntityKind) -> ActionOutcome {
        let outcome = self.strike(actor, kind);
        if outcome.ok && outcome.text.starts_with("attacked") {
            let origin = self.entities[&EntityId::new(actor)].position;
            let target = self.nearest_mob(origin, ATTACK_RADIUS, |m| m.kind == kind);
            if let Some(e) = self.entity_mut(actor) {
                e.behavior.engaged = target;
            }
        }
        outcome
    }

    /// Fights back against the nearest mob currently targeting the actor.
    pub fn defend_self(&mut self, actor: &str) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        let me = EntityId::new(actor);
        let Some(target) = self.nearest_mob(origin, ATTACK_RADIUS, |m| m.behavior.target.as_ref() == Some(&me)) else {
            return ActionOutcome::failure("no mobs attacking");
        };
        let kind = self.entities[&target].kind;
        self.hit(&me, &target, ATTACK_DAMAGE);
        if self.entities[&target].is_alive() {
            if let Some(e) = self.entities.get_mut(&me) {
                e.behavior.engaged = Some(target);
            }
            ActionOutcome::success(format!("attacked {kind}"))
        } else {
            ActionOutcome::success(format!("killed {kind}"))
        }
    }

    /// Hands one item over to a nearby entity.
    pub fn transfer_item(&mut self, from: &str, to: &str, item: ItemKind) -> ActionOutcome {
        let origin = match self.living_actor(from) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        let Some(receiver) = self.entity(to) else {
            return ActionOutcome::failure(format!("unknown entity {to}"));
        };
        if !receiver.is_alive() {
            return ActionOutcome::failure(format!("{} is dead", receiver.name));
        }
        let dest = receiver.position;
        let Some(giver) = self.entity(from) else {
            return ActionOutcome::failure(format!("unknown entity {from}"));
        };
        if !giver.inventory.contains(item) {
            return ActionOutcome::failure(format!("do not have {item}"));
        }
        if origin.reach(dest) > TRANSFER_RADIUS {
            return ActionOutcome::failure("too far away");
        }
        let (from_id, to_id) = (EntityId::new(from), EntityId::new(to));
        self.take(&from_id, item);
        self.give(&to_id, item, 1);
        self.emit(WorldEvent::Transferred { from: from_id, to: to_id, item });
        ActionOutcome::success(format!("gave {item}"))
    }

    fn nearest_chest(&self, origin: Position) -> Option<Position> {
        self.chests
            .0
            .keys()
            .filter(|p| p.reach(origin) <= CHEST_RADIUS)
            .min_by_key(|p| (p.reach(origin), p.dist2(origin), **p))
            .copied()
    }

    /// Lists the nearest chest's contents without touching them.
    pub fn query_chest(&self, actor: &str) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        match self.nearest_chest(origin) {
            Some(at) => ActionOutcome::success(self.chests.0[&at].describe()),
            None => ActionOutcome::failure("no chest nearby"),
        }
    }

    /// Empties the nearest chest into the actor's inventory. The outcome text
    /// lists what was taken.
    pub fn open_chest(&mut self, actor: &str) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        let Some(at) = self.nearest_chest(origin) else {
            return ActionOutcome::failure("no chest nearby");
        };
        let items: Inventory = self.chests.0.get_mut(&at).map(Inventory::take_all).unwrap_or_default();
        let id = EntityId::new(actor);
        self.emit(WorldEvent::ChestOpened { actor: id.clone(), position: at, items: items.clone() });
        for stack in items.stacks() {
            self.give(&id, stack.item, stack.count);
        }
        ActionOutcome::success(items.describe())
    }

    /// Places a building block next to the actor at foot level, or, with
    /// `Direction::Down`, jumps and places it underneath (pillaring up).
    /// Placing a bed means sleeping in it, which only works at night.
    pub fn place_block(&mut self, actor: &str, item: ItemKind, dir: Direction) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        if item == ItemKind::Bed {
            return self.sleep(actor);
        }
        let Some(block) = item.block() else {
            return ActionOutcome::failure(format!("cannot place {item}"));
        };
        let id = EntityId::new(actor);
        if !self.entities[&id].inventory.contains(item) {
            return ActionOutcome::failure(format!("do not have {item}"));
        }
        let (target, rise) = match dir {
            Direction::Down => (origin, Some(origin.above())),
            Direction::Up => return ActionOutcome::failure("cannot place there"),
            horizontal => {
                let (dx, dy, dz) = horizontal.offset();
                (origin.offset(dx, dy, dz), None)
            }
        };
        if !in_bounds(target) || self.block(target).is_solid() {
            return ActionOutcome::failure("cannot place there");
        }
        if let Some(up) = rise {
            if !in_bounds(up) || self.block(up).is_solid() {
                return ActionOutcome::failure("no room to jump");
            }
        }
        let occupied = self
            .entities
            .values()
            .any(|e| e.is_alive() && e.position == target && e.id != id);
        if occupied {
            return ActionOutcome::failure("cannot place there");
        }
        if let Some(up) = rise {
            self.relocate(&id, up);
        }
        self.take(&id, item);
        self.blocks.set(target, block);
        self.emit(WorldEvent::Placed { actor: id, block, position: target });
        ActionOutcome::success(format!("placed {block}"))
    }

    fn sleep(&mut self, actor: &str) -> ActionOutcome {
        let id = EntityId::new(actor);
        if !self.entities[&id].inventory.contains(ItemKind::Bed) {
            return ActionOutcome::failure("do not have bed");
        }
        if self.time_of_day == TimeOfDay::Day {
            return ActionOutcome::failure("you can only sleep at night");
        }
        self.time_of_day = TimeOfDay::Day;
        self.day_clock = 0;
        self.emit(WorldEvent::Slept { id });
        self.emit(WorldEvent::TimeChanged { time: TimeOfDay::Day });
        ActionOutcome::success("slept until morning")
    }

    /// Player walking: one block per call in a compass direction, stepping
    /// up or down a single block where needed.
    pub fn move_entity(&mut self, actor: &str, dir: Direction) -> ActionOutcome {
        let origin = match self.living_actor(actor) {
            Ok(p) => p,
            Err(fail) => return fail,
        };
        if !dir.is_horizontal() {
            return ActionOutcome::failure(format!("cannot move {dir}"));
        }
        let id = EntityId::new(actor);
        let region = self.region_of(&id);
        match self.step_target(origin, dir, [0, 1, -1]) {
            Some(p) if region.is_none_or(|r| r.contains(p)) => {
                self.relocate(&id, p);
                ActionOutcome::success(format!("moved {dir}"))
            }
            _ => ActionOutcome::failure("blocked"),
        }
    }
}
