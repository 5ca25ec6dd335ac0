use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::actions::{format_call, render_skill_section, FunctionCall, Registry, RegistryError, CATALOG};

const ELENA_JSON: &str = include_str!("../../assets/npcs/elena.json");
const ALARIC_JSON: &str = include_str!("../../assets/npcs/alaric.json");

/// The rule every shipped constraint list starts with.
pub const NO_INVENTION_RULE: &str = "Do not invent new NPCs.";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("cannot read profile {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid profile JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("profile field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("constraints must include \"{NO_INVENTION_RULE}\"")]
    MissingNoInventionRule,
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("prompt for {npc} mentions `{function}`, which is not one of its skills")]
    ForeignFunction { npc: String, function: String },
}

/// A skill listed in a profile, optionally with its own prompt sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SkillEntry {
    Name(String),
    Described { name: String, description: String },
}

impl SkillEntry {
    pub fn name(&self) -> &str {
        match self {
            SkillEntry::Name(n) | SkillEntry::Described { name: n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallExample {
    pub player: String,
    pub call: FunctionCall,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnExample {
    pub returns: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NpcProfile {
    /// Entity id of the NPC in the world.
    pub id: String,
    pub name: String,
    pub game_setting: String,
    pub opening_story: String,
    pub persona: String,
    pub backstory: String,
    pub main_goal: String,
    pub skills: Vec<SkillEntry>,
    pub call_examples: Vec<CallExample>,
    pub return_examples: Vec<ReturnExample>,
    pub constraints: Vec<String>,
    pub scene: String,
}

impl NpcProfile {
    pub fn elena() -> NpcProfile {
        Self::from_json(ELENA_JSON).expect("shipped profile is valid")
    }

    pub fn alaric() -> NpcProfile {
        Self::from_json(ALARIC_JSON).expect("shipped profile is valid")
    }

    pub fn shipped() -> Vec<NpcProfile> {
        vec![Self::elena(), Self::alaric()]
    }

    pub fn from_json(text: &str) -> Result<NpcProfile, ProfileError> {
        let profile: NpcProfile = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: &Path) -> Result<NpcProfile, ProfileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ProfileError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn registry(&self) -> Result<Registry, RegistryError> {
        let names: Vec<&str> = self.skills.iter().map(SkillEntry::name).collect();
        let mut registry = Registry::from_names(&self.name, &names)?;
        for skill in &self.skills {
            if let SkillEntry::Described { name, description } = skill {
                registry.set_description(name, description);
            }
        }
        Ok(registry)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let fields = [
            ("id", &self.id),
            ("name", &self.name),
            ("game_setting", &self.game_setting),
            ("opening_story", &self.opening_story),
            ("persona", &self.persona),
            ("backstory", &self.backstory),
            ("main_goal", &self.main_goal),
            ("scene", &self.scene),
        ];
        if let Some((field, _)) = fields.iter().find(|(_, v)| v.trim().is_empty()) {
            return Err(ProfileError::EmptyField(field));
        }
        if self.constraints.is_empty() || self.constraints.iter().any(|c| c.trim().is_empty()) {
            return Err(ProfileError::EmptyField("constraints"));
        }
        if !self.constraints.iter().any(|c| c.trim() == NO_INVENTION_RULE) {
            return Err(ProfileError::MissingNoInventionRule);
        }
        let registry = self.registry()?;
        let block = self.system_block(&registry);
        if let Some(function) = CATALOG.iter().find(|f| !registry.contains(f) && block.contains(*f)) {
            return Err(ProfileError::ForeignFunction { npc: self.name.clone(), function: function.to_string() });
        }
        Ok(())
    }

    /// The fixed part of every prompt for this NPC.
    pub fn system_block(&self, registry: &Registry) -> String {
        let mut out = String::new();
        out.push_str(self.game_setting.trim_end());
        out.push_str("\n\n");
        out.push_str(&format!("Opening Story: {}\n\n", self.opening_story));
        out.push_str(&format!("Persona: {}\n\n", self.persona));
        out.push_str(&format!("Backstory: {}\n\n", self.backstory));
        out.push_str(&format!("Main goal: {}\n\n", self.main_goal));
        out.push_str(&format!("Your skills: {}\n\n", render_skill_section(registry)));

        out.push_str("Below are some examples of function calls:\n");
        for (i, ex) in self.call_examples.iter().enumerate() {
            out.push_str(&format!("Example {}:\nPlayer: {}\n{}\n", i + 1, ex.player, format_call(&ex.call)));
        }
        out.push('\n');

        out.push_str("Below are some examples of text response for function returns:\n");
        for (i, ex) in self.return_examples.iter().enumerate() {
            out.push_str(&format!(
                "Example {}:\nFunction_Returns: {}\n{}: {}\n",
                i + 1,
                ex.returns,
                self.name,
                ex.response
            ));
        }
        out.push('\n');

        out.push_str("IMPORTANT: Follow these constraints when you respond to the player:\n");
        for c in &self.constraints {
            out.push_str(c);
            out.push('\n');
        }
        out.push('\n');
        out.push_str(&format!("Scene: {}", self.scene));
        out
    }

    /// SHA-256 of the profile's canonical JSON.
    pub fn digest(&self) -> String {
        let value = serde_json::to_value(self).expect("profiles serialize");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_profiles_load() {
        let elena = NpcProfile::elena();
        assert_eq!((elena.id.as_str(), elena.name.as_str()), ("elena", "Elena"));
        assert_eq!(elena.registry().unwrap(), Registry::elena());
        let alaric = NpcProfile::alaric();
        let names: Vec<_> = alaric.registry().unwrap().names().map(String::from).collect();
        let builtin: Vec<_> = Registry::alaric().names().map(String::from).collect();
        assert_eq!(names, builtin);
    }

    #[test]
    fn alaric_skills_read_as_one_paragraph() {
        let alaric = NpcProfile::alaric();
        assert!(render_skill_section(&alaric.registry().unwrap()).ends_with(
            "by using `mineBlock`. Defend yourself from mobs using function `defendSelf' or attack them using `attackEntity'."
        ));
    }

    #[test]
    fn system_block_sections_are_in_order() {
        let elena = NpcProfile::elena();
        let block = elena.system_block(&elena.registry().unwrap());
        let heads = [
            "This is a game set in Minecraft.",
            "Opening Story:",
            "Persona:",
            "Backstory:",
            "Main goal:",
            "Your skills:",
            "Below are some examples of function calls:",
            "Function: [{'name':'mineBlock', 'arguments': ['oak_log']}]",
            "Below are some examples of text response for function returns:",
            "Function_Returns: do not have iron_pickaxe\nElena: Sorry I don't have it with me now.",
            "IMPORTANT: Follow these constraints",
            "Do not invent new NPCs.",
            "Scene:",
        ];
        let mut at = 0;
        for h in heads {
            let found = block[at..].find(h).unwrap_or_else(|| panic!("{h:?} missing or out of order"));
            at += found + h.len();
        }
        assert!(!block.contains("attackEntity"));
    }

    #[test]
    fn validation_catches_bad_profiles() {
        let mut p = NpcProfile::elena();
        p.persona = " ".into();
        assert!(matches!(p.validate(), Err(ProfileError::EmptyField("persona"))));

        let mut p = NpcProfile::elena();
        p.constraints.retain(|c| c != NO_INVENTION_RULE);
        assert!(matches!(p.validate(), Err(ProfileError::MissingNoInventionRule)));

        let mut p = NpcProfile::elena();
        p.scene.push_str(" Elena could use attackEntity.");
        assert!(matches!(p.validate(), Err(ProfileError::ForeignFunction { .. })));

        let mut p = NpcProfile::elena();
        p.skills.push(SkillEntry::Name("fly".into()));
        assert!(matches!(p.validate(), Err(ProfileError::Registry(_))));
    }

    #[test]
    fn json_round_trip() {
        let p = NpcProfile::alaric();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(NpcProfile::from_json(&text).unwrap(), p);
        assert_eq!(p.digest(), NpcProfile::alaric().digest());
    }
}
