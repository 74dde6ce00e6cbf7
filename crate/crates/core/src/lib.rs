//! Simulator and optimizers for RIS-assisted, semantic-aware vehicular edge
//! computing: channel and semantic-rate models, the per-vehicle offloading
//! program, a PPO agent, GA and QPSO baselines, and the experiment harness.

pub mod agent;
pub mod baselines;
pub mod channel;
pub mod env;
pub mod harness;
pub mod latency;
pub mod lp;
pub mod offload;
pub mod scenario;
pub mod semantic;

pub use agent::{Agent, AgentConfig, AgentError, Checkpoint};
pub use baselines::{BaselineError, SearchSpace};
pub use channel::{ChannelRealization, RadioConfig, RisPhaseConfig};
pub use env::{Decision, EnvError, Environment, SlotOutcome, SystemConfig};
pub use harness::{load_config, ExperimentConfig, HarnessError, Method, SweepAxis};
pub use latency::ComputeParams;
pub use offload::OffloadSplit;
pub use scenario::{ScenarioConfig, ScenarioState};
pub use semantic::{SemanticParams, SemanticTable};
