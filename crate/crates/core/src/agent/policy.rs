use std::f64::consts::{LN_2, PI};

use ndarray::ArrayView2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::network::Mlp;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Actor (mean head plus a state-independent log-std) and critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub log_std: Vec<f64>,
    pub critic: Mlp,
}

/// One draw from the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Gaussian sample before the squashing.
    pub pre_tanh: Vec<f64>,
    /// `tanh(pre_tanh)`, the raw action in (−1, 1).
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

/// `Σ log(1 − tanh²(u))`, computed as `2·(ln 2 − u − softplus(−2u))` to stay
/// finite for large |u|.
pub fn tanh_log_jacobian(pre_tanh: &[f64]) -> f64 {
    pre_tanh
        .iter()
        .map(|&u| 2.0 * (LN_2 - u - softplus(-2.0 * u)))
        .sum()
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Log-density of `pre_tanh` under `N(mean, exp(log_std)²)`.
pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], pre_tanh: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(pre_tanh)
        .map(|((&m, &ls), &u)| {
            let z = (u - m) * (-ls).exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

impl PolicyParams {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], log_std_init: f64, rng: &mut R) -> Self {
        let sizes = |out: usize| -> Vec<usize> {
            std::iter::once(obs_dim)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(out))
                .collect()
        };
        Self {
            actor: Mlp::new(&sizes(act_dim), 0.01, rng),
            log_std: vec![log_std_init.clamp(LOG_STD_MIN, LOG_STD_MAX); act_dim],
            critic: Mlp::new(&sizes(1), 1.0, rng),
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn mean(&self, obs: &[f64]) -> Vec<f64> {
        self.actor.predict(obs)
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.critic.predict(obs)[0]
    }

    pub fn values(&self, obs: ArrayView2<'_, f64>) -> Vec<f64> {
        self.critic.forward(obs).output().column(0).to_vec()
    }

    /// Log-probability of the squashed action `tanh(pre_tanh)`.
    pub fn log_prob(&self, mean: &[f64], pre_tanh: &[f64]) -> f64 {
        gaussian_log_prob(mean, &self.log_std, pre_tanh) - tanh_log_jacobian(pre_tanh)
    }

    /// Entropy of the pre-squash Gaussian.
    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| 0.5 + 0.5 * (2.0 * PI).ln() + ls).sum()
    }

    /// Samples around a precomputed mean.
    pub fn sample_around<R: Rng + ?Sized>(&self, mean: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let pre: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(&m, &ls)| {
                let z: f64 = StandardNormal.sample(rng);
                m + ls.exp() * z
            })
            .collect();
        let action = pre.iter().map(|u| u.tanh()).collect();
        (pre, action)
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R) -> Sample {
        let mean = self.mean(obs);
        let (pre_tanh, action) = self.sample_around(&mean, rng);
        Sample {
            log_prob: self.log_prob(&mean, &pre_tanh),
            value: self.value(obs),
            pre_tanh,
            action,
        }
    }

    /// Exploration switched off: `tanh(μ(s))`.
    pub fn deterministic(&self, obs: &[f64]) -> Vec<f64> {
        self.mean(obs).iter().map(|m| m.tanh()).collect()
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.actor
            .params
            .iter()
            .chain(&self.log_std)
            .chain(&self.critic.params)
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn policy(log_std: f64) -> PolicyParams {
        PolicyParams::new(4, 3, &[8, 8], log_std, &mut ChaCha8Rng::seed_from_u64(0))
    }

    #[test]
    fn actions_inside_open_interval() {
        let p = policy(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let s = p.sample(&[0.1, -0.5, 0.3, 0.9], &mut rng);
            assert!(s.action.iter().all(|a| a.abs() < 1.0));
            assert!(s.log_prob.is_finite());
        }
    }

    #[test]
    fn vanishing_noise_gives_deterministic_action() {
        let mut p = policy(0.0);
        p.log_std = vec![-40.0; 3];
        let obs = [0.2, 0.1, -0.3, 0.4];
        let s = p.sample(&obs, &mut ChaCha8Rng::seed_from_u64(2));
        for (a, d) in s.action.iter().zip(p.deterministic(&obs)) {
            assert!((a - d).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_mean_matches_policy_mean() {
        let p = policy(-0.5);
        let obs = [0.5, -0.2, 0.0, 0.7];
        let mean = p.mean(&obs);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut acc = vec![0.0; 3];
        for _ in 0..n {
            let s = p.sample(&obs, &mut rng);
            for (a, u) in acc.iter_mut().zip(&s.pre_tanh) {
                *a += u;
            }
        }
        let sigma = (-0.5f64).exp();
        for (a, m) in acc.iter().zip(&mean) {
            assert!((a / n as f64 - m).abs() < 3.0 * sigma / (n as f64).sqrt());
        }
    }

    #[test]
    fn jacobian_is_stable() {
        let u = [0.3];
        let direct = (1.0 - 0.3f64.tanh().powi(2)).ln();
        assert!((tanh_log_jacobian(&u) - direct).abs() < 1e-12);
        assert!(tanh_log_jacobian(&[40.0]).is_finite());
        assert!(tanh_log_jacobian(&[-40.0]).is_finite());
    }

    /// The density of the squashed action integrates to one over (−1, 1).
    #[test]
    fn squashed_density_normalizes() {
        let p = PolicyParams {
            log_std: vec![-0.3],
            ..PolicyParams::new(1, 1, &[2], -0.3, &mut ChaCha8Rng::seed_from_u64(4))
        };
        let mean = [0.4];
        let n = 200_000;
        let h = 2.0 / n as f64;
        let total: f64 = (0..n)
            .map(|i| {
                let a: f64 = -1.0 + (i as f64 + 0.5) * h;
                p.log_prob(&mean, &[a.atanh()]).exp() * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    /// Histogram of sampled actions against the analytic density.
    #[test]
    fn log_prob_matches_sampling_density() {
        let p = PolicyParams {
            log_std: vec![0.2],
            ..PolicyParams::new(1, 1, &[2], 0.2, &mut ChaCha8Rng::seed_from_u64(5))
        };
        let mean = [-0.3];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 200_000;
        let bins = 20;
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            let (_, a) = p.sample_around(&mean, &mut rng);
            let b = (((a[0] + 1.0) / 2.0) * bins as f64) as usize;
            counts[b.min(bins - 1)] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            let lo = -1.0 + 2.0 * b as f64 / bins as f64;
            let width = 2.0 / bins as f64;
            let prob: f64 = (0..200)
                .map(|i| {
                    let a: f64 = lo + (i as f64 + 0.5) * width / 200.0;
                    p.log_prob(&mean, &[a.atanh()]).exp() * width / 200.0
                })
                .sum();
            let expected = prob * n as f64;
            let sd = (n as f64 * prob * (1.0 - prob)).sqrt();
            assert!((c as f64 - expected).abs() <= 3.0 * sd + 1.0, "bin {b}: {c} vs {expected:.1}");
        }
    }

    #[test]
    fn entropy_of_unit_gaussian() {
        let mut p = policy(0.0);
        p.log_std = vec![0.0; 3];
        let h = 3.0 * (0.5 + 0.5 * (2.0 * PI).ln());
        assert!((p.entropy() - h).abs() < 1e-12);
    }
}
