//! Central finite differences of the PPO loss, for checking the analytic
//! gradient.

use super::policy::PolicyParams;
use super::ppo::{loss_and_grad, Batch, Gradients, PpoConfig};

/// Denominator floor of the relative error, so that two gradients that are
/// both numerically zero do not count as a mismatch.
pub const RELATIVE_FLOOR: f64 = 1e-8;

fn total(params: &PolicyParams, batch: &Batch, cfg: &PpoConfig) -> f64 {
    loss_and_grad(params, batch, cfg).0.total
}

/// Central difference `(L(θ+h) − L(θ−h)) / 2h` for every parameter.
pub fn numerical_gradient(params: &PolicyParams, batch: &Batch, cfg: &PpoConfig, h: f64) -> Gradients {
    let mut p = params.clone();
    let mut probe = |get: fn(&mut PolicyParams) -> &mut Vec<f64>, len: usize| -> Vec<f64> {
        (0..len)
            .map(|i| {
                let orig = get(&mut p)[i];
                get(&mut p)[i] = orig + h;
                let up = total(&p, batch, cfg);
                get(&mut p)[i] = orig - h;
                let down = total(&p, batch, cfg);
                get(&mut p)[i] = orig;
                (up - down) / (2.0 * h)
            })
            .collect()
    };
    let actor = probe(|p| &mut p.actor.params, params.actor.num_params());
    let log_std = probe(|p| &mut p.log_std, params.log_std.len());
    let critic = probe(|p| &mut p.critic.params, params.critic.num_params());
    Gradients { actor, log_std, critic }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Largest relative error over all parameters.
pub fn max_relative_error(params: &PolicyParams, batch: &Batch, cfg: &PpoConfig, analytic: &Gradients, h: f64) -> f64 {
    let numeric = numerical_gradient(params, batch, cfg, h);
    let pairs = analytic
        .actor
        .iter()
        .zip(&numeric.actor)
        .chain(analytic.log_std.iter().zip(&numeric.log_std))
        .chain(analytic.critic.iter().zip(&numeric.critic));
    pairs.map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max)
}
