use super::constants::*;
use super::{Direction, EntityId, EntityKind, TickedEvent, TimeOfDay, WorldEvent, WorldState};

const WANDER_DIRS: [Direction; 4] = [Direction::North, Direction::South, Direction::East, Direction::West];

impl WorldState {
    /// Advances the world by one tick and returns the events it produced.
    /// Events already queued by actions stay queued.
    pub fn tick(&mut self) -> Vec<TickedEvent> {
        let pending = std::mem::take(&mut self.outbox);
        self.advance();
        std::mem::replace(&mut self.outbox, pending)
    }

    fn advance(&mut self) {
        self.tick += 1;
        self.day_clock += 1;
        if self.day_clock >= HALF_DAY_TICKS {
            self.day_clock = 0;
            self.time_of_day = match self.time_of_day {
                TimeOfDay::Day => TimeOfDay::Night,
                TimeOfDay::Night => TimeOfDay::Day,
            };
            self.emit(WorldEvent::TimeChanged { time: self.time_of_day });
        }

        let ids: Vec<EntityId> = self.entities.keys().cloned().collect();
        for id in ids {
            // Dead entities (including ones killed earlier this tick) skip.
            let Some(entity) = self.entities.get(&id) else { continue };
            if !entity.is_alive() {
                continue;
            }
            match entity.kind {
                EntityKind::Npc => self.npc_step(&id),
                kind if kind.is_mob() => self.mob_step(&id),
                _ => {}
            }
        }
    }

    fn npc_step(&mut self, id: &EntityId) {
        let me = &self.entities[id];
        let here = me.position;
        if let Some(target) = me.behavior.engaged.clone() {
            let in_range = self
                .entities
                .get(&target)
                .is_some_and(|t| t.is_alive() && t.position.reach(here) <= ATTACK_RADIUS);
            if in_range {
                self.hit(id, &target, ATTACK_DAMAGE);
                if !self.entities[&target].is_alive() {
                    self.entities.get_mut(id).unwrap().behavior.engaged = None;
                }
                return;
            }
            self.entities.get_mut(id).unwrap().behavior.engaged = None;
        }
        if self.entities[id].behavior.follow_player {
            let player = self.player();
            if player.is_alive() && player.position.reach(here) > FOLLOW_DISTANCE {
                let goal = player.position;
                if let Some(next) = self.greedy_step(id, here, goal) {
                    self.relocate(id, next);
                }
            }
        }
    }

    fn mob_step(&mut self, id: &EntityId) {
        let here = self.entities[id].position;
        let target = self
            .entities
            .values()
            .filter(|e| e.kind.is_character() && e.is_alive() && e.position.reach(here) <= AGGRO_RADIUS)
            .min_by_key(|e| (e.position.reach(here), e.position.dist2(here), e.id.clone()))
            .map(|e| (e.id.clone(), e.position));
        self.entities.get_mut(id).unwrap().behavior.target = target.as_ref().map(|(t, _)| t.clone());

        if let Some((target, at)) = target {
            if at.reach(here) <= MOB_ATTACK_RANGE {
                self.hit(id, &target, MOB_DAMAGE);
            } else if let Some(next) = self.greedy_step(id, here, at) {
                self.relocate(id, next);
            }
            return;
        }

        let home = self.entities[id].behavior.home.unwrap_or(here);
        if here.reach(home) > LEASH_RADIUS {
            if let Some(next) = self.greedy_step(id, here, home) {
                self.relocate(id, next);
            }
            return;
        }
        if self.rng().below(IDLE_WANDER_ODDS) != 0 {
            return;
        }
        let dir = WANDER_DIRS[self.rng().below(4) as usize];
        if let Some(next) = self.step_target(here, dir, [0, 1, -1]) {
            if next.reach(home) <= LEASH_RADIUS {
                self.relocate(id, next);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{create_world, ALARIC_ID};
    use super::*;

    #[test]
    fn adjacent_spider_bites_for_two() {
        let mut w = create_world(7);
        w.clear_mobs();
        let alaric = w.entity(ALARIC_ID).unwrap().position;
        let spider = w.spawn_mob(EntityKind::Spider, alaric.offset(1, 0, 0));
        let events = w.tick();
        assert!(events.iter().any(|e| e.event
            == WorldEvent::Damage {
                target: EntityId::new(ALARIC_ID),
                attacker: spider.clone(),
                amount: 2,
                health: NPC_HEALTH - 2,
            }));
        assert_eq!(w.entity(ALARIC_ID).unwrap().health, NPC_HEALTH - 2);
    }

    #[test]
    fn no_mobs_no_combat() {
        let mut w = create_world(7);
        w.clear_mobs();
        for _ in 0..50 {
            let events = w.tick();
            assert!(events
                .iter()
                .all(|e| !matches!(e.event, WorldEvent::Damage { .. } | WorldEvent::Death { .. })));
        }
        assert_eq!(w.tick, 50);
    }

    #[test]
    fn mobs_chase_within_aggro_radius() {
        let mut w = create_world(7);
        w.clear_mobs();
        let alaric = w.entity(ALARIC_ID).unwrap().position;
        let zombie = w.spawn_mob(EntityKind::Zombie, alaric.offset(5, 0, 0));
        w.tick();
        assert_eq!(w.entities[&zombie].position, alaric.offset(4, 0, 0));
    }

    #[test]
    fn engaged_npc_keeps_striking() {
        let mut w = create_world(7);
        w.clear_mobs();
        let alaric = w.entity(ALARIC_ID).unwrap().position;
        let spider = w.spawn_mob(EntityKind::Spider, alaric.offset(2, 0, 0));
        assert_eq!(w.attack_entity(ALARIC_ID, EntityKind::Spider).text, "attacked spider");
        assert_eq!(w.entities[&spider].health, SPIDER_HEALTH - ATTACK_DAMAGE);
        let events = w.tick();
        assert!(!w.entities[&spider].is_alive());
        assert!(events.iter().any(|e| matches!(e.event, WorldEvent::Death { .. })));
        assert!(events.iter().any(|e| matches!(
            &e.event,
            WorldEvent::AreaCleared { npc, mob: EntityKind::Spider } if npc.as_str() == ALARIC_ID
        )));
    }

    #[test]
    fn day_turns_to_night() {
        let mut w = create_world(7);
        w.clear_mobs();
        let mut flips = Vec::new();
        for _ in 0..HALF_DAY_TICKS {
            flips.extend(w.tick());
        }
        assert_eq!(w.time_of_day, TimeOfDay::Night);
        assert_eq!(flips.len(), 1);
    }
}
