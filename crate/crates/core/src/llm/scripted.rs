use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionParams, LlmBackend, PromptDocument};

/// What a rule looks for. Text matchers run against the messages written
/// since the NPC last spoke, rendered with their speaker prefixes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    Substring(String),
    Pattern(String),
    /// 1-based index of the call to this backend.
    CallIndex(usize),
    Always,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRule {
    #[serde(rename = "match")]
    pub matcher: Matcher,
    /// Restricts the rule to prompts for this NPC.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub npc: Option<String>,
    pub response: String,
    #[serde(default)]
    pub once: bool,
}

impl ScriptRule {
    pub fn new(matcher: Matcher, response: impl Into<String>) -> Self {
        ScriptRule { matcher, npc: None, response: response.into(), once: false }
    }

    pub fn for_npc(mut self, npc: &str) -> Self {
        self.npc = Some(npc.to_string());
        self
    }

    pub fn once(mut self) -> Self {
        self.once = true;
        self
    }
}

enum Compiled {
    Substring(String),
    Pattern(Regex),
    CallIndex(usize),
    Always,
}

/// A table-driven stand-in for a language model: the first rule whose
/// matcher fits the prompt supplies the reply.
pub struct ScriptedBackend {
    rules: Vec<(ScriptRule, Compiled)>,
    used: Vec<bool>,
    calls: usize,
}

impl ScriptedBackend {
    pub fn new(rules: Vec<ScriptRule>) -> Result<Self, BackendError> {
        let rules = rules
            .into_iter()
            .map(|rule| {
                let compiled = match &rule.matcher {
                    Matcher::Substring(s) => Compiled::Substring(s.clone()),
                    Matcher::Pattern(p) => Compiled::Pattern(
                        Regex::new(p).map_err(|e| BackendError::Config(format!("bad pattern {p:?}: {e}")))?,
                    ),
                    Matcher::CallIndex(i) => Compiled::CallIndex(*i),
                    Matcher::Always => Compiled::Always,
                };
                Ok((rule, compiled))
            })
            .collect::<Result<Vec<_>, BackendError>>()?;
        let used = vec![false; rules.len()];
        Ok(ScriptedBackend { rules, used, calls: 0 })
    }

    /// Parses a JSON Lines rule file; blank lines are skipped.
    pub fn parse_rules(text: &str) -> Result<Vec<ScriptRule>, BackendError> {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| BackendError::Config(format!("rule line {}: {e}", i + 1)))
            })
            .collect()
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::new(Self::parse_rules(&text)?)
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&mut self, doc: &PromptDocument, _params: &CompletionParams) -> Result<String, BackendError> {
        self.calls += 1;
        let latest = doc.latest_text();
        for (i, (rule, compiled)) in self.rules.iter().enumerate() {
            if self.used[i] {
                continue;
            }
            if rule.npc.as_deref().is_some_and(|n| !n.eq_ignore_ascii_case(&doc.npc)) {
                continue;
            }
            let hit = match compiled {
                Compiled::Substring(s) => latest.contains(s.as_str()),
                Compiled::Pattern(re) => re.is_match(&latest),
                Compiled::CallIndex(n) => *n == self.calls,
                Compiled::Always => true,
            };
            if hit {
                if rule.once {
                    self.used[i] = true;
                }
                return Ok(rule.response.clone());
            }
        }
        Err(BackendError::NoRuleMatched { call: self.calls })
    }
}
