//! The functions an NPC may call, how they are written in model output and
//! how they are carried out against the world.

mod parse;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{ActionOutcome, BlockKind, EntityKind, ItemKind, WorldState};

pub use parse::{format_call, format_calls, parse_npc_output, ParseWarning, ParsedOutput};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionCall {
    pub name: String,
    pub arguments: Vec<String>,
}

impl FunctionCall {
    pub fn new(name: impl Into<String>, arguments: &[&str]) -> Self {
        FunctionCall { name: name.into(), arguments: arguments.iter().map(|a| a.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionResult {
    pub call: FunctionCall,
    pub ok: bool,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    pub arity: usize,
    /// Legal values for each argument position.
    pub arg_domain: Vec<Vec<String>>,
    /// Sentence used in the prompt's skills section.
    pub description: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{0}` listed twice")]
    Duplicate(String),
}

fn names<T: Copy>(all: &[T], keep: impl Fn(T) -> bool, text: impl Fn(T) -> &'static str) -> Vec<String> {
    all.iter().copied().filter(|&k| keep(k)).map(|k| text(k).to_string()).collect()
}

/// Every function the runtime knows how to dispatch.
pub const CATALOG: &[&str] = &[
    "goToPlayer",
    "followPlayer",
    "pointToLocation",
    "equipItem",
    "dropItem",
    "mineBlock",
    "defendSelf",
    "attackEntity",
];

impl FunctionSpec {
    /// Looks up a function in the built-in catalog.
    pub fn builtin(name: &str) -> Option<FunctionSpec> {
        let items = || names(ItemKind::ALL, |_| true, ItemKind::as_str);
        let (arg_domain, description) = match name {
            "goToPlayer" => (vec![], "Go to the player's location using `goToPlayer'."),
            "followPlayer" => (vec![], "Follow the player using `followPlayer'."),
            "pointToLocation" => (
                vec![vec!["village".to_string(), "island".to_string()]],
                "Point to a specific location using `pointToLocation'.",
            ),
            "equipItem" => (vec![items()], "Equip yourself with an item in your inventory using `equipItem'."),
            "dropItem" => (vec![items()], "Give the player an item in your inventory by using `dropItem'."),
            // Every block kind is a legal argument so that asking for bedrock
            // reaches the world and comes back as a readable failure.
            "mineBlock" => (
                vec![names(BlockKind::ALL, |b| b != BlockKind::Air, BlockKind::as_str)],
                "Mine blocks (only cobblestone, dirt, stone and oak_log) by using `mineBlock`.",
            ),
            "defendSelf" => (vec![], "Defend yourself from mobs using function `defendSelf'."),
            "attackEntity" => (
                vec![names(EntityKind::ALL, EntityKind::is_mob, EntityKind::as_str)],
                "Attack mobs using `attackEntity'.",
            ),
            _ => return None,
        };
        Some(FunctionSpec {
            name: name.to_string(),
            arity: arg_domain.len(),
            arg_domain,
            description: description.to_string(),
        })
    }

    fn accepts(&self, args: &[String]) -> bool {
        args.len() == self.arity && args.iter().zip(&self.arg_domain).all(|(a, dom)| dom.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub npc_name: String,
    pub specs: Vec<FunctionSpec>,
}

impl Registry {
    pub fn from_names<S: AsRef<str>>(npc_name: &str, names: &[S]) -> Result<Registry, RegistryError> {
        let mut seen = BTreeSet::new();
        let mut specs = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            if !seen.insert(name) {
                return Err(RegistryError::Duplicate(name.to_string()));
            }
            specs.push(FunctionSpec::builtin(name).ok_or_else(|| RegistryError::UnknownFunction(name.to_string()))?);
        }
        Ok(Registry { npc_name: npc_name.to_string(), specs })
    }

    pub fn empty(npc_name: &str) -> Registry {
        Registry { npc_name: npc_name.to_string(), specs: Vec::new() }
    }

    pub fn elena() -> Registry {
        Self::from_names(
            "Elena",
            &["goToPlayer", "followPlayer", "pointToLocation", "equipItem", "dropItem", "mineBlock"],
        )
        .expect("builtin names")
    }

    pub fn alaric() -> Registry {
        Self::from_names(
            "Alaric",
            &["goToPlayer", "followPlayer", "equipItem", "dropItem", "mineBlock", "defendSelf", "attackEntity"],
        )
        .expect("builtin names")
    }

    /// Replaces the prompt sentence for `name`; false if it is not registered.
    pub fn set_description(&mut self, name: &str, description: &str) -> bool {
        match self.specs.iter_mut().find(|s| s.name == name) {
            Some(spec) => {
                spec.description = description.to_string();
                true
            }
            None => false,
        }
    }

    pub fn get(&self, name: &str) -> Option<&FunctionSpec> {
        self.specs.iter().find(|s| s.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }
}

/// The prompt paragraph describing what the NPC can do.
pub fn render_skill_section(registry: &Registry) -> String {
    let mut out = String::from("You can talk to the player directly.");
    if !registry.specs.is_empty() {
        out.push_str(" To execute your skills generate function calls.");
        // An empty description means the preceding sentence already covers it.
        for spec in registry.specs.iter().filter(|s| !s.description.is_empty()) {
            out.push(' ');
            out.push_str(&spec.description);
        }
    }
    out
}

/// Validates `call` against `registry` and, if it is legal, performs it in
/// the world on behalf of `actor`. Rejected calls never touch the world.
pub fn dispatch(registry: &Registry, world: &mut WorldState, actor: &str, call: &FunctionCall) -> FunctionResult {
    let outcome = match registry.get(&call.name) {
        None => ActionOutcome::failure(format!("unknown function {}", call.name)),
        Some(spec) => {
            // Models write `'arguments': ['']` for nullary calls.
            let args: Vec<String> = call.arguments.iter().filter(|a| !a.trim().is_empty()).cloned().collect();
            if spec.accepts(&args) {
                perform(world, actor, &call.name, &args)
            } else {
                ActionOutcome::failure("invalid arguments")
            }
        }
    };
    FunctionResult { call: call.clone(), ok: outcome.ok, text: outcome.text }
}

fn perform(world: &mut WorldState, actor: &str, name: &str, args: &[String]) -> ActionOutcome {
    let arg = || args[0].as_str();
    let parse_err = |_| ActionOutcome::failure("invalid arguments");
    let result = match name {
        "goToPlayer" => Ok(world.go_to_player(actor)),
        "followPlayer" => Ok(world.follow_player(actor)),
        "pointToLocation" => Ok(world.point_to_location(actor, arg())),
        "equipItem" => arg().parse().map(|i| world.equip_item(actor, i)).map_err(parse_err),
        "dropItem" => arg().parse().map(|i| world.drop_item(actor, i)).map_err(parse_err),
        "mineBlock" => arg().parse().map(|b| world.mine_block(actor, b)).map_err(parse_err),
        "defendSelf" => Ok(world.defend_self(actor)),
        "attackEntity" => arg().parse().map(|k| world.attack_entity(actor, k)).map_err(parse_err),
        other => Err(ActionOutcome::failure(format!("unknown function {other}"))),
    };
    result.unwrap_or_else(|e| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{create_world, EntityKind, ALARIC_ID, ELENA_ID};

    #[test]
    fn registries_follow_personas() {
        let elena: Vec<_> = Registry::elena().names().map(String::from).collect();
        assert_eq!(elena, ["goToPlayer", "followPlayer", "pointToLocation", "equipItem", "dropItem", "mineBlock"]);
        let alaric = Registry::alaric();
        assert!(!alaric.contains("pointToLocation"));
        assert!(alaric.contains("defendSelf") && alaric.contains("attackEntity"));
    }

    #[test]
    fn registry_rejects_unknown_and_duplicate_names() {
        assert_eq!(
            Registry::from_names("X", &["fly"]),
            Err(RegistryError::UnknownFunction("fly".to_string()))
        );
        assert_eq!(
            Registry::from_names("X", &["dropItem", "dropItem"]),
            Err(RegistryError::Duplicate("dropItem".to_string()))
        );
    }

    #[test]
    fn skill_sections() {
        let elena = render_skill_section(&Registry::elena());
        assert!(elena.starts_with("You can talk to the player directly."));
        assert!(elena.contains("mineBlock") && !elena.contains("attackEntity"));
        assert!(render_skill_section(&Registry::alaric()).contains("defendSelf"));
        assert_eq!(render_skill_section(&Registry::empty("Nobody")), "You can talk to the player directly.");
    }

    #[test]
    fn elena_cannot_attack() {
        let mut w = create_world(7);
        let before = w.canonical_json();
        let r = dispatch(&Registry::elena(), &mut w, ELENA_ID, &FunctionCall::new("attackEntity", &["spider"]));
        assert!(!r.ok);
        assert_eq!(r.text, "unknown function attackEntity");
        assert_eq!(w.canonical_json(), before);
        assert!(w.take_events().is_empty());
    }

    #[test]
    fn alaric_drops_his_netherite_sword() {
        let mut w = create_world(7);
        let r = dispatch(&Registry::alaric(), &mut w, ALARIC_ID, &FunctionCall::new("dropItem", &["netherite_sword"]));
        assert!(r.ok);
        assert_eq!(r.text, "dropped netherite_sword");
    }

    #[test]
    fn missing_item_is_reported() {
        let mut w = create_world(7);
        let call = FunctionCall::new("dropItem", &["iron_pickaxe"]);
        assert!(dispatch(&Registry::elena(), &mut w, ELENA_ID, &call).ok);
        let r = dispatch(&Registry::elena(), &mut w, ELENA_ID, &call);
        assert_eq!((r.ok, r.text.as_str()), (false, "do not have iron_pickaxe"));
    }

    #[test]
    fn bad_arguments_do_not_touch_the_world() {
        let mut w = create_world(7);
        let before = w.canonical_json();
        for call in [
            FunctionCall::new("dropItem", &["golden_apple"]),
            FunctionCall::new("dropItem", &[]),
            FunctionCall::new("mineBlock", &["dirt", "stone"]),
            FunctionCall::new("pointToLocation", &["castle"]),
        ] {
            let r = dispatch(&Registry::elena(), &mut w, ELENA_ID, &call);
            assert_eq!((r.ok, r.text.as_str()), (false, "invalid arguments"), "{call:?}");
        }
        assert_eq!(w.canonical_json(), before);
    }

    #[test]
    fn empty_argument_means_none() {
        let mut w = create_world(7);
        w.clear_mobs();
        let alaric = w.entity(ALARIC_ID).unwrap().position;
        w.spawn_mob(EntityKind::Spider, alaric.offset(1, 0, 0));
        w.tick();
        let r = dispatch(&Registry::alaric(), &mut w, ALARIC_ID, &FunctionCall::new("defendSelf", &[""]));
        assert!(r.ok, "{}", r.text);
    }

    #[test]
    fn alaric_attack_hurts_a_spider() {
        let mut w = create_world(7);
        let here = w.entity(ALARIC_ID).unwrap().position;
        let spider = w.spawn_mob(EntityKind::Spider, here.offset(2, 0, 0));
        let r = dispatch(&Registry::alaric(), &mut w, ALARIC_ID, &FunctionCall::new("attackEntity", &["spider"]));
        assert!(r.ok);
        assert!(w.entity(spider.as_str()).unwrap().health < crate::world::constants::SPIDER_HEALTH);
    }

    #[test]
    fn mining_bedrock_fails_in_the_world() {
        let mut w = create_world(7);
        let r = dispatch(&Registry::elena(), &mut w, ELENA_ID, &FunctionCall::new("mineBlock", &["bedrock"]));
        assert_eq!(r.text, "cannot mine bedrock");
    }
}
