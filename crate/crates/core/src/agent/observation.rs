//! State vector seen by the agent.
//!
//! Layout: vehicle positions (x, y, z each), service-vehicle positions, the
//! user-to-RIS angle of every vehicle, the RIS phase indices currently
//! applied, the per-link SINR under those phases, and each vehicle's task
//! count. Every entry is mapped into [−1, 1] with constants fixed from the
//! configuration.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::env::{Environment, SystemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub road_length: f64,
    pub x_scale: f64,
    pub z_scale: f64,
    pub sinr_center_db: f64,
    pub sinr_half_range_db: f64,
    /// Task count mapped to +1.
    pub task_cap: f64,
    pub phase_levels: usize,
}

impl ObsNormalizer {
    pub fn from_system(sys: &SystemConfig) -> Self {
        let sc = &sys.scenario;
        let x_scale = sc
            .lane_offsets
            .iter()
            .chain([&sc.rsu_pos.x, &sc.ris_pos.x])
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let z_scale = sc.rsu_pos.z.max(sc.ris_pos.z).max(1.0);
        let mean = sc.arrival_mean;
        Self {
            road_length: sc.road_length,
            x_scale,
            z_scale,
            sinr_center_db: 10.0,
            sinr_half_range_db: 30.0,
            task_cap: (mean + 3.0 * mean.sqrt()).ceil().max(1.0),
            phase_levels: sys.radio.phase_levels(),
        }
    }

    pub fn dim(sys: &SystemConfig) -> usize {
        let k = sys.num_vehicles();
        let j = sys.scenario.num_service_vehicles;
        3 * (k + j) + k + sys.ris_elements() + 2 * k + k
    }

    fn unit(v: f64, lo: f64, hi: f64) -> f64 {
        (2.0 * (v - lo) / (hi - lo) - 1.0).clamp(-1.0, 1.0)
    }

    pub fn observe(&self, env: &Environment) -> Vec<f64> {
        let state = env.state();
        let slot = env.slot();
        let sys = env.system();
        let mut obs = Vec::with_capacity(Self::dim(sys));
        for p in state.vehicles.iter().chain(&state.service_vehicles) {
            obs.push((p.x / self.x_scale).clamp(-1.0, 1.0));
            obs.push(Self::unit(p.y, 0.0, self.road_length));
            obs.push(Self::unit(p.z, 0.0, self.z_scale));
        }
        obs.extend(slot.channel.aoa.iter().map(|a| (a / FRAC_PI_2).clamp(-1.0, 1.0)));
        let top = (self.phase_levels - 1).max(1) as f64;
        obs.extend(env.phases().phase_index.iter().map(|&i| Self::unit(i as f64, 0.0, top)));
        obs.extend(env.current_sinr_db().into_iter().map(|db| {
            if db.is_finite() {
                ((db - self.sinr_center_db) / self.sinr_half_range_db).clamp(-1.0, 1.0)
            } else {
                -1.0
            }
        }));
        let unit_bits = sys.scenario.task_unit_bits;
        obs.extend(slot.task_bits.iter().map(|b| Self::unit(b / unit_bits, 0.0, self.task_cap)));
        obs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RadioConfig;
    use crate::env::Decision;
    use crate::latency::ComputeParams;
    use crate::scenario::ScenarioConfig;
    use crate::semantic::SemanticParams;

    #[test]
    fn fixed_length_and_bounded() {
        let sys = SystemConfig::with_synthetic_table(
            ScenarioConfig {
                num_vehicles: 5,
                num_service_vehicles: 2,
                ..ScenarioConfig::default()
            },
            RadioConfig {
                ris_elements: 9,
                ..RadioConfig::default()
            },
            SemanticParams::default(),
            ComputeParams::default(),
            20,
        );
        let norm = ObsNormalizer::from_system(&sys);
        let mut env = Environment::new(sys.clone(), 1).unwrap();
        for t in 0..20 {
            let obs = norm.observe(&env);
            assert_eq!(obs.len(), ObsNormalizer::dim(&sys));
            assert!(obs.iter().all(|v| v.is_finite() && (-1.0..=1.0).contains(v)));
            let mut d = Decision::uniform(&sys, 3);
            d.phase_index = vec![t % 4; 9];
            env.step(&d).unwrap();
        }
    }
}
