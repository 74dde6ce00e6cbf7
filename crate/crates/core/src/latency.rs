//! Delay model of the three parallel execution paths (local, V2I to the RSU,
//! V2V to a service vehicle) and the per-path unit-time coefficients used by
//! the offloading LP.

use serde::{Deserialize, Serialize};

use crate::offload::OffloadSplit;
use crate::semantic::SemanticParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeParams {
    pub cycles_per_bit: f64,
    pub local_freq: f64,
    /// Total RSU capacity, shared evenly by its U_0 users.
    pub rsu_freq: f64,
    /// Capacity of each SV, shared evenly by its U_j users.
    pub sv_freq: f64,
    /// Per-vehicle deadline T_max.
    pub max_delay: f64,
}

impl Default for ComputeParams {
    fn default() -> Self {
        Self {
            cycles_per_bit: 1000.0,
            local_freq: 2e9,
            rsu_freq: 6e9,
            sv_freq: 2e9,
            max_delay: 0.5,
        }
    }
}

/// Whole-task delay of each path; `f64::INFINITY` marks an unusable path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCoefficients {
    pub local: f64,
    pub rsu: f64,
    pub sv: f64,
}

impl PathCoefficients {
    pub fn new(local: f64, rsu: f64, sv: f64) -> Self {
        Self { local, rsu, sv }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.local, self.rsu, self.sv]
    }

    pub fn usable(&self) -> [bool; 3] {
        self.as_array().map(|m| m.is_finite())
    }
}

pub fn local_delay(rho: f64, bits: f64, cycles_per_bit: f64, local_freq: f64) -> f64 {
    rho * bits * cycles_per_bit / local_freq
}

/// Transmission of `rho·Q·I` semantic units at rate `rate`.
fn transmission(rho: f64, sentences: f64, units: f64, rate: f64) -> f64 {
    if rho == 0.0 {
        0.0
    } else if rate > 0.0 {
        rho * sentences * units / rate
    } else {
        f64::INFINITY
    }
}

/// Compute time on a server whose capacity `capacity` is split evenly among
/// `users` requesters.
fn shared_compute(rho: f64, bits: f64, cycles_per_bit: f64, capacity: f64, users: usize) -> f64 {
    rho * bits * cycles_per_bit / (capacity / users.max(1) as f64)
}

/// V2I delay: semantic transmission plus RSU compute.
#[allow(clippy::too_many_arguments)]
pub fn v2i_delay(
    rho: f64,
    sentences: f64,
    units_per_sentence: f64,
    rate: f64,
    bits: f64,
    cycles_per_bit: f64,
    rsu_freq: f64,
    rsu_users: usize,
) -> f64 {
    transmission(rho, sentences, units_per_sentence, rate)
        + shared_compute(rho, bits, cycles_per_bit, rsu_freq, rsu_users)
}

/// V2V delay: semantic transmission plus SV compute.
#[allow(clippy::too_many_arguments)]
pub fn v2v_delay(
    rho: f64,
    sentences: f64,
    units_per_sentence: f64,
    rate: f64,
    bits: f64,
    cycles_per_bit: f64,
    sv_freq: f64,
    sv_users: usize,
) -> f64 {
    transmission(rho, sentences, units_per_sentence, rate)
        + shared_compute(rho, bits, cycles_per_bit, sv_freq, sv_users)
}

/// End-to-end delay of a split: the slowest of the three parallel paths.
pub fn total_delay(split: &OffloadSplit, paths: &PathCoefficients) -> f64 {
    let part = |rho: f64, mu: f64| if rho == 0.0 { 0.0 } else { rho * mu };
    part(split.rho_loc, paths.local)
        .max(part(split.rho_rsu, paths.rsu))
        .max(part(split.rho_sv, paths.sv))
}

/// Inputs of one vehicle's path coefficients.
#[derive(Debug, Clone, Copy)]
pub struct VehicleLoad {
    pub bits: f64,
    pub v2i_rate: f64,
    pub v2v_rate: f64,
    pub rsu_users: usize,
    pub sv_users: usize,
}

/// Unit data processing time of each path (the delay at ρ = 1).
pub fn path_coefficients(load: &VehicleLoad, semantic: &SemanticParams, compute: &ComputeParams) -> PathCoefficients {
    let q = semantic.sentences(load.bits);
    let i = semantic.units_per_sentence;
    let c = compute.cycles_per_bit;
    PathCoefficients {
        local: local_delay(1.0, load.bits, c, compute.local_freq),
        rsu: v2i_delay(1.0, q, i, load.v2i_rate, load.bits, c, compute.rsu_freq, load.rsu_users),
        sv: v2v_delay(1.0, q, i, load.v2v_rate, load.bits, c, compute.sv_freq, load.sv_users),
    }
}
