//! PPO agent choosing RIS phases and semantic symbol counts.

pub mod checkpoint;
pub mod gradcheck;
pub mod mapping;
pub mod network;
pub mod observation;
pub mod policy;
pub mod ppo;
pub mod train;

use thiserror::Error;

use crate::env::EnvError;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use mapping::{action_to_decision, map_nu, map_phase, map_phase_index};
pub use observation::ObsNormalizer;
pub use policy::PolicyParams;
pub use ppo::{PpoConfig, Transition};
pub use train::{train, train_agent, Agent, AgentConfig, EpisodeSeeding, TrainLog};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("non-finite loss or gradient; update aborted")]
    NonFiniteLoss,
    #[error("agent expects observation/action sizes {expected:?}, system has {found:?}")]
    Dimension {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
