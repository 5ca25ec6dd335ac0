use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use questforge::llm::{LlmBackend, RemoteBackend, RemoteConfig, ReplayBackend, ScriptedBackend};
use questforge::session::walkthrough_backend;

/// Which model provider a session talks to, as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Remote,
    /// Rule file; `None` means the bundled walkthrough rules.
    Scripted(Option<PathBuf>),
    Replay(PathBuf),
}

impl std::str::FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "remote" => Ok(BackendSpec::Remote),
            None if s == "scripted" => Ok(BackendSpec::Scripted(None)),
            Some(("scripted", path)) if !path.is_empty() => Ok(BackendSpec::Scripted(Some(path.into()))),
            Some(("replay", path)) if !path.is_empty() => Ok(BackendSpec::Replay(path.into())),
            _ => Err(format!("expected remote, scripted[:<file>] or replay:<tape>, got `{s}`")),
        }
    }
}

impl BackendSpec {
    pub fn build(&self) -> Result<Box<dyn LlmBackend + Send>> {
        Ok(match self {
            BackendSpec::Remote => Box::new(RemoteBackend::new(RemoteConfig::from_env()?)?),
            BackendSpec::Scripted(None) => Box::new(walkthrough_backend()),
            BackendSpec::Scripted(Some(path)) => Box::new(
                ScriptedBackend::from_file(path).with_context(|| format!("loading rules from {}", path.display()))?,
            ),
            BackendSpec::Replay(path) => {
                if !path.exists() {
                    bail!("tape {} does not exist", path.display());
                }
                Box::new(ReplayBackend::from_file(path)?)
            }
        })
    }
}
