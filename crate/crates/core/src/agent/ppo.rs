//! Clipped-surrogate PPO with Monte-Carlo returns.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{gather_rows, Adam};
use super::policy::{gaussian_log_prob, tanh_log_jacobian, PolicyParams};
use super::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// Transitions collected before each update.
    pub update_steps: usize,
    pub epochs: usize,
    pub minibatch: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.6,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            lr_actor: 3e-4,
            lr_critic: 1e-3,
            update_steps: 2048,
            epochs: 10,
            minibatch: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    /// Gaussian sample before squashing; the executed raw action is its tanh.
    pub pre_tanh: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// `G_t = Σ_l γ^l r_{t+l}`, restarting after every `done`.
pub fn discounted_returns(rewards: &[f64], dones: &[bool], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        if dones[t] {
            acc = 0.0;
        }
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Shifts and scales to zero mean and unit variance (population variance,
/// with a 1e-8 guard on the deviation).
pub fn standardize(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    for v in values {
        *v = (*v - mean) / sd;
    }
}

/// Returns and standardized advantages `A_t = G_t − V(s_t)`.
pub fn returns_and_advantages(transitions: &[Transition], gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let rewards: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let dones: Vec<bool> = transitions.iter().map(|t| t.done).collect();
    let returns = discounted_returns(&rewards, &dones, gamma);
    let mut adv: Vec<f64> = returns.iter().zip(transitions).map(|(g, t)| g - t.value).collect();
    standardize(&mut adv);
    (returns, adv)
}

/// Training tensors, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub pre_tanh: Array2<f64>,
    pub old_log_prob: Array1<f64>,
    pub returns: Array1<f64>,
    pub advantages: Array1<f64>,
}

impl Batch {
    pub fn new(transitions: &[Transition], returns: &[f64], advantages: &[f64]) -> Self {
        let rows = |f: &dyn Fn(&Transition) -> &[f64]| {
            let w = transitions.first().map_or(0, |t| f(t).len());
            let flat: Vec<f64> = transitions.iter().flat_map(|t| f(t).iter().copied()).collect();
            Array2::from_shape_vec((transitions.len(), w), flat).expect("rectangular")
        };
        Self {
            obs: rows(&|t| &t.obs),
            pre_tanh: rows(&|t| &t.pre_tanh),
            old_log_prob: transitions.iter().map(|t| t.log_prob).collect(),
            returns: Array1::from(returns.to_vec()),
            advantages: Array1::from(advantages.to_vec()),
        }
    }

    pub fn len(&self) -> usize {
        self.obs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            obs: gather_rows(&self.obs, idx),
            pre_tanh: gather_rows(&self.pre_tanh, idx),
            old_log_prob: idx.iter().map(|&i| self.old_log_prob[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub total: f64,
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub actor: Vec<f64>,
    pub log_std: Vec<f64>,
    pub critic: Vec<f64>,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.actor.iter().chain(&self.log_std).chain(&self.critic).all(|g| g.is_finite())
    }
}

/// Per-sample probability ratios against the stored log-probabilities.
pub fn ratios(params: &PolicyParams, batch: &Batch) -> Vec<f64> {
    let mean = params.actor.forward(batch.obs.view()).output().clone();
    (0..batch.len())
        .map(|i| {
            let u = batch.pre_tanh.row(i);
            let u = u.as_slice().expect("row-major");
            let m = mean.row(i);
            let lp = gaussian_log_prob(m.as_slice().expect("row-major"), &params.log_std, u) - tanh_log_jacobian(u);
            (lp - batch.old_log_prob[i]).exp()
        })
        .collect()
}

/// `L = −L_clip + c1·L_vf − c2·S` and its gradient with respect to every
/// parameter.
pub fn loss_and_grad(params: &PolicyParams, batch: &Batch, cfg: &PpoConfig) -> (LossTerms, Gradients) {
    let m = batch.len() as f64;
    let act_dim = params.act_dim();
    let actor_fwd = params.actor.forward(batch.obs.view());
    let mean = actor_fwd.output();
    let critic_fwd = params.critic.forward(batch.obs.view());
    let values = critic_fwd.output().column(0).to_owned();
    let inv_var: Vec<f64> = params.log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();

    let mut surrogate = 0.0;
    let mut ratio_sum = 0.0;
    let mut clipped = 0usize;
    let mut grad_mean = Array2::zeros((batch.len(), act_dim));
    let mut grad_log_std = vec![0.0; act_dim];

    for i in 0..batch.len() {
        let u = batch.pre_tanh.row(i);
        let mu = mean.row(i);
        let lp = gaussian_log_prob(
            mu.as_slice().expect("row-major"),
            &params.log_std,
            u.as_slice().expect("row-major"),
        ) - tanh_log_jacobian(u.as_slice().expect("row-major"));
        let ratio = (lp - batch.old_log_prob[i]).exp();
        let adv = batch.advantages[i];
        let unclipped = ratio * adv;
        let clipped_term = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
        ratio_sum += ratio;
        // d/d logp of min(r·A, clip(r)·A): r·A where the unclipped branch is
        // active, 0 where the clip holds the value flat
        let dterm = if unclipped <= clipped_term {
            surrogate += unclipped;
            ratio * adv
        } else {
            surrogate += clipped_term;
            clipped += 1;
            0.0
        };
        let dlogp = -dterm / m;
        for d in 0..act_dim {
            let diff = u[d] - mu[d];
            grad_mean[[i, d]] = dlogp * diff * inv_var[d];
            grad_log_std[d] += dlogp * (diff * diff * inv_var[d] - 1.0);
        }
    }
    surrogate /= m;

    let err = &values - &batch.returns;
    let value_loss = err.mapv(|e| e * e).sum() / m;
    let entropy = params.entropy();
    for g in &mut grad_log_std {
        *g -= cfg.entropy_coef;
    }
    let grad_values = (err * (2.0 * cfg.value_coef / m)).insert_axis(Axis(1));

    let terms = LossTerms {
        total: -surrogate + cfg.value_coef * value_loss - cfg.entropy_coef * entropy,
        surrogate,
        value: value_loss,
        entropy,
        mean_ratio: ratio_sum / m,
        clip_fraction: clipped as f64 / m,
    };
    let grads = Gradients {
        actor: params.actor.backward(&actor_fwd, grad_mean),
        log_std: grad_log_std,
        critic: params.critic.backward(&critic_fwd, grad_values),
    };
    (terms, grads)
}

/// Adam states of the actor (network and log-std) and the critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizers {
    pub actor: Adam,
    pub log_std: Adam,
    pub critic: Adam,
}

impl Optimizers {
    pub fn new(params: &PolicyParams, cfg: &PpoConfig) -> Self {
        Self {
            actor: Adam::new(params.actor.num_params(), cfg.lr_actor),
            log_std: Adam::new(params.log_std.len(), cfg.lr_actor),
            critic: Adam::new(params.critic.num_params(), cfg.lr_critic),
        }
    }

    pub fn apply(&mut self, params: &mut PolicyParams, grads: &Gradients) {
        self.actor.step(&mut params.actor.params, &grads.actor);
        self.log_std.step(&mut params.log_std, &grads.log_std);
        self.critic.step(&mut params.critic.params, &grads.critic);
        params.clamp_log_std();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UpdateStats {
    pub first: LossTerms,
    pub last: LossTerms,
    pub minibatches: usize,
}

/// Several epochs of shuffled minibatch steps over one batch. A non-finite
/// loss or gradient aborts before that step is applied.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    opt: &mut Optimizers,
    batch: &Batch,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, AgentError> {
    let mut stats = UpdateStats::default();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let size = cfg.minibatch.max(1);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(size) {
            let mb = batch.select(chunk);
            let (terms, grads) = loss_and_grad(params, &mb, cfg);
            if !terms.total.is_finite() || !grads.is_finite() {
                return Err(AgentError::NonFiniteLoss);
            }
            if stats.minibatches == 0 {
                stats.first = terms;
            }
            stats.last = terms;
            stats.minibatches += 1;
            opt.apply(params, &grads);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn returns_examples() {
        let g = discounted_returns(&[1.0, 1.0, 1.0], &[false, false, true], 0.5);
        assert_eq!(g, vec![1.75, 1.5, 1.0]);
        let g = discounted_returns(&[2.0, -1.0, 4.0], &[false, false, true], 0.0);
        assert_eq!(g, vec![2.0, -1.0, 4.0]);
        // episode boundary in the middle
        let g = discounted_returns(&[1.0, 1.0, 1.0, 1.0], &[false, true, false, true], 0.5);
        assert_eq!(g, vec![1.5, 1.0, 1.5, 1.0]);
    }

    #[test]
    fn standardized_mean_zero() {
        let mut v: Vec<f64> = (0..100).map(|i| (i as f64).sin() * 3.0 + 7.0).collect();
        standardize(&mut v);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((var - 1.0).abs() < 1e-6);
    }

    pub(crate) fn random_batch(params: &PolicyParams, n: usize, rng: &mut ChaCha8Rng) -> Batch {
        let obs_dim = params.obs_dim();
        let transitions: Vec<Transition> = (0..n)
            .map(|_| {
                let obs: Vec<f64> = (0..obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = params.sample(&obs, rng);
                Transition {
                    obs,
                    pre_tanh: s.pre_tanh,
                    log_prob: s.log_prob,
                    value: s.value,
                    reward: -rng.random::<f64>(),
                    done: false,
                }
            })
            .collect();
        let returns: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let adv: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        Batch::new(&transitions, &returns, &adv)
    }

    #[test]
    fn unchanged_params_give_unit_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let params = PolicyParams::new(5, 3, &[16, 16], -0.5, &mut rng);
        let batch = random_batch(&params, 64, &mut rng);
        for r in ratios(&params, &batch) {
            assert!((r - 1.0).abs() < 1e-12, "{r}");
        }
        let (terms, _) = loss_and_grad(&params, &batch, &PpoConfig::default());
        assert!((terms.mean_ratio - 1.0).abs() < 1e-12);
        assert_eq!(terms.clip_fraction, 0.0);
    }

    #[test]
    fn clip_caps_positive_advantage_gain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = PolicyParams::new(3, 2, &[8], -0.5, &mut rng);
        let mut batch = random_batch(&params, 32, &mut rng);
        batch.advantages.fill(1.0);
        // push the policy far from the one that produced the samples
        for p in &mut params.actor.params {
            *p += 0.5;
        }
        let cfg = PpoConfig::default();
        let (terms, _) = loss_and_grad(&params, &batch, &cfg);
        assert!(terms.surrogate <= 1.0 + cfg.clip + 1e-12);
        assert!(terms.clip_fraction > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = PpoConfig::default();
        for _ in 0..10 {
            let mut params = PolicyParams::new(4, 2, &[6, 6], -0.5, &mut rng);
            let batch = random_batch(&params, 16, &mut rng);
            // move away from the sampling policy so ratios differ from 1
            for p in &mut params.actor.params {
                *p += 0.05 * rng.random_range(-1.0..1.0);
            }
            let (_, g) = loss_and_grad(&params, &batch, &cfg);
            let worst = super::super::gradcheck::max_relative_error(&params, &batch, &cfg, &g, 1e-5);
            assert!(worst <= 1e-4, "{worst}");
        }
    }

    #[test]
    fn update_lowers_loss_on_fixed_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = PolicyParams::new(4, 2, &[16, 16], -0.5, &mut rng);
        let batch = random_batch(&params, 128, &mut rng);
        let cfg = PpoConfig {
            epochs: 20,
            minibatch: 32,
            ..PpoConfig::default()
        };
        let mut opt = Optimizers::new(&params, &cfg);
        let before = loss_and_grad(&params, &batch, &cfg).0.total;
        let stats = ppo_update(&mut params, &mut opt, &batch, &cfg, &mut rng).unwrap();
        let after = loss_and_grad(&params, &batch, &cfg).0.total;
        assert_eq!(stats.minibatches, 20 * 4);
        assert!(after < before, "{after} !< {before}");
        assert!(params.log_std.iter().all(|l| (-5.0..=2.0).contains(l)));
    }

    #[test]
    fn non_finite_loss_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = PolicyParams::new(3, 2, &[4], -0.5, &mut rng);
        let mut batch = random_batch(&params, 8, &mut rng);
        batch.returns[0] = f64::NAN;
        let mut opt = Optimizers::new(&params, &PpoConfig::default());
        let before = params.clone();
        let r = ppo_update(&mut params, &mut opt, &batch, &PpoConfig::default(), &mut rng);
        assert!(matches!(r, Err(AgentError::NonFiniteLoss)));
        assert_eq!(params, before);
    }
}
