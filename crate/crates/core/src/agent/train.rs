use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mapping::action_to_decision;
use super::observation::ObsNormalizer;
use super::policy::PolicyParams;
use super::ppo::{ppo_update, returns_and_advantages, Batch, Optimizers, PpoConfig, Transition, UpdateStats};
use super::AgentError;
use crate::env::{derive_seed, Decision, Environment, SlotOutcome, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub log_std_init: f64,
    pub ppo: PpoConfig,
    /// Training episodes (E_max).
    pub episodes: usize,
    /// Slots per training episode.
    pub episode_len: usize,
    /// Test rounds (E_test).
    pub eval_rounds: usize,
    /// Slots per test round.
    pub eval_len: usize,
    pub episode_seeding: EpisodeSeeding,
}

/// How the scenario is re-seeded when a training episode starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeSeeding {
    /// Every episode replays the same scenario realization, so episode
    /// rewards differ only through the policy.
    #[default]
    Fixed,
    /// Every episode draws a fresh scenario realization.
    Varying,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256, 256],
            log_std_init: -0.5,
            ppo: PpoConfig::default(),
            episodes: 5000,
            episode_len: 200,
            eval_rounds: 1,
            eval_len: 200,
            episode_seeding: EpisodeSeeding::Fixed,
        }
    }
}

const STREAM_INIT: u64 = 10;
const STREAM_SAMPLING: u64 = 11;
const STREAM_EPISODE: u64 = 1_000_000;

/// Seed of the scenario used for training episode `episode`.
pub fn episode_seed(seed: u64, episode: usize, seeding: EpisodeSeeding) -> u64 {
    match seeding {
        EpisodeSeeding::Fixed => derive_seed(seed, STREAM_EPISODE),
        EpisodeSeeding::Varying => derive_seed(seed, STREAM_EPISODE + 1 + episode as u64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub config: AgentConfig,
    pub normalizer: ObsNormalizer,
    pub params: PolicyParams,
    pub optim: Optimizers,
}

impl Agent {
    pub fn new(sys: &SystemConfig, config: &AgentConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_INIT));
        let params = PolicyParams::new(
            ObsNormalizer::dim(sys),
            sys.action_dim(),
            &config.hidden,
            config.log_std_init,
            &mut rng,
        );
        Self {
            config: config.clone(),
            normalizer: ObsNormalizer::from_system(sys),
            optim: Optimizers::new(&params, &config.ppo),
            params,
        }
    }

    pub fn check_system(&self, sys: &SystemConfig) -> Result<(), AgentError> {
        let (obs, act) = (ObsNormalizer::dim(sys), sys.action_dim());
        if obs != self.params.obs_dim() || act != self.params.act_dim() {
            return Err(AgentError::Dimension {
                expected: (self.params.obs_dim(), self.params.act_dim()),
                found: (obs, act),
            });
        }
        Ok(())
    }

    pub fn observe(&self, env: &Environment) -> Vec<f64> {
        self.normalizer.observe(env)
    }

    /// Deterministic decision `tanh(μ(s))` for the current slot.
    pub fn decide(&self, env: &Environment) -> Decision {
        let action = self.params.deterministic(&self.observe(env));
        action_to_decision(&action, env.system())
    }

    /// Decision for the current slot under an evaluation budget.
    ///
    /// With `budget ≤ 1` this is the deterministic action. Otherwise the
    /// deterministic action and `budget − 1` policy samples are all scored
    /// and the lowest-delay one is returned; exactly `max(budget, 1)`
    /// evaluations are spent. Nothing is committed.
    pub fn decide_with_budget(
        &self,
        env: &mut Environment,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Decision, SlotOutcome), AgentError> {
        let obs = self.observe(env);
        let mean = self.params.mean(&obs);
        let mut decisions = vec![action_to_decision(
            &mean.iter().map(|m| m.tanh()).collect::<Vec<_>>(),
            env.system(),
        )];
        for _ in 1..budget.max(1) {
            let (_, action) = self.params.sample_around(&mean, rng);
            decisions.push(action_to_decision(&action, env.system()));
        }
        let outcomes = env.evaluate_batch(&decisions)?;
        let best = outcomes
            .iter()
            .enumerate()
            .fold(0, |b, (i, o)| if o.total_delay < outcomes[b].total_delay { i } else { b });
        Ok((decisions.swap_remove(best), outcomes.into_iter().nth(best).expect("non-empty")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean per-slot reward of every episode.
    pub episode_rewards: Vec<f64>,
    pub updates: Vec<UpdateStats>,
}

/// Rolls out one episode with sampled actions.
pub fn rollout(
    agent: &Agent,
    env: &mut Environment,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Transition>, AgentError> {
    let mut out = Vec::with_capacity(steps);
    for t in 0..steps {
        let obs = agent.observe(env);
        let s = agent.params.sample(&obs, rng);
        let decision = action_to_decision(&s.action, env.system());
        let outcome = env.step(&decision)?;
        out.push(Transition {
            obs,
            pre_tanh: s.pre_tanh,
            log_prob: s.log_prob,
            value: s.value,
            reward: outcome.reward(),
            done: t + 1 == steps,
        });
    }
    Ok(out)
}

/// Trains a fresh agent.
pub fn train(sys: &SystemConfig, config: &AgentConfig, seed: u64) -> Result<(Agent, TrainLog), AgentError> {
    let mut agent = Agent::new(sys, config, seed);
    let log = train_agent(&mut agent, sys, seed, |_, _| {})?;
    Ok((agent, log))
}

/// Training loop: whole episodes are collected until at least
/// `update_steps` transitions are buffered, then the buffer is used for one
/// PPO update and cleared. `on_episode` sees every episode's mean reward.
pub fn train_agent(
    agent: &mut Agent,
    sys: &SystemConfig,
    seed: u64,
    mut on_episode: impl FnMut(usize, f64),
) -> Result<TrainLog, AgentError> {
    agent.check_system(sys)?;
    let cfg = agent.config.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SAMPLING));
    let mut env = Environment::new(sys.clone(), episode_seed(seed, 0, cfg.episode_seeding))?;
    let mut log = TrainLog::default();
    let mut buffer: Vec<Transition> = Vec::with_capacity(cfg.ppo.update_steps + cfg.episode_len);

    for episode in 0..cfg.episodes {
        env.reset(episode_seed(seed, episode, cfg.episode_seeding))?;
        let transitions = rollout(agent, &mut env, cfg.episode_len, &mut rng)?;
        let mean = transitions.iter().map(|t| t.reward).sum::<f64>() / transitions.len().max(1) as f64;
        log.episode_rewards.push(mean);
        on_episode(episode, mean);
        buffer.extend(transitions);

        if buffer.len() >= cfg.ppo.update_steps || (episode + 1 == cfg.episodes && !buffer.is_empty()) {
            let (returns, adv) = returns_and_advantages(&buffer, cfg.ppo.gamma);
            let batch = Batch::new(&buffer, &returns, &adv);
            let stats = ppo_update(&mut agent.params, &mut agent.optim, &batch, &cfg.ppo, &mut rng)?;
            log.updates.push(stats);
            buffer.clear();
        }
    }
    Ok(log)
}
