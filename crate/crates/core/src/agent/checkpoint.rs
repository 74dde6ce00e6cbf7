//! JSON checkpoint: layer shapes and weights, log-std, optimizer moments,
//! observation normalization constants and the hash of the configuration
//! that produced them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::Agent;
use super::AgentError;

pub const CHECKPOINT_FORMAT: &str = "risvec-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub agent: Agent,
}

impl Checkpoint {
    pub fn new(agent: Agent, config_hash: impl Into<String>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config_hash: config_hash.into(),
            agent,
        }
    }

    pub fn to_json(&self) -> Result<String, AgentError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, AgentError> {
        #[derive(Deserialize)]
        struct Header {
            format: Option<String>,
            version: Option<u32>,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format.as_deref() != Some(CHECKPOINT_FORMAT) {
            return Err(AgentError::Checkpoint("not a checkpoint file".into()));
        }
        match header.version {
            Some(CHECKPOINT_VERSION) => {}
            Some(v) => return Err(AgentError::Checkpoint(format!("unsupported checkpoint version {v}"))),
            None => return Err(AgentError::Checkpoint("missing version field".into())),
        }
        let ckpt: Self = serde_json::from_str(text)?;
        if !ckpt.agent.params.is_finite() {
            return Err(AgentError::Checkpoint("non-finite weights".into()));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AgentError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::train::AgentConfig;
    use crate::env::SystemConfig;

    fn agent() -> Agent {
        let sys = SystemConfig::with_synthetic_table(
            Default::default(),
            crate::channel::RadioConfig {
                ris_elements: 4,
                ..Default::default()
            },
            Default::default(),
            Default::default(),
            20,
        );
        Agent::new(
            &sys,
            &AgentConfig {
                hidden: vec![8, 8],
                ..AgentConfig::default()
            },
            1,
        )
    }

    #[test]
    fn round_trip_is_exact() {
        let c = Checkpoint::new(agent(), "abc");
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        let c = Checkpoint::new(agent(), "h");
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), c);
    }

    #[test]
    fn rejects_wrong_version() {
        let c = Checkpoint::new(agent(), "h");
        let text = c.to_json().unwrap().replacen("\"version\": 1", "\"version\": 99", 1);
        assert!(matches!(Checkpoint::from_json(&text), Err(AgentError::Checkpoint(m)) if m.contains("99")));
        let text = c.to_json().unwrap().replacen("\"version\": 1,", "", 1);
        assert!(matches!(Checkpoint::from_json(&text), Err(AgentError::Checkpoint(_))));
    }

    #[test]
    fn rejects_other_json() {
        assert!(Checkpoint::from_json("{\"a\": 1}").is_err());
        assert!(Checkpoint::from_json("not json").is_err());
    }
}
