//! Raw actions in [−1, 1] to executable decisions.

use std::f64::consts::PI;

use crate::channel::phase_value;
use crate::env::{Decision, SystemConfig};

/// `round((a + 1)/2 · (ν_max − 1)) + 1`, rounding half away from zero.
pub fn map_nu(a: f64, nu_max: u32) -> u32 {
    let a = if a.is_nan() { -1.0 } else { a.clamp(-1.0, 1.0) };
    let scaled = (a + 1.0) / 2.0 * (nu_max.max(1) - 1) as f64;
    (scaled.round() as u32 + 1).clamp(1, nu_max.max(1))
}

/// Index of the element of `{2πi/L}` closest to `π(a + 1)`, measured on the
/// real line (no wrap-around); ties go to the smaller phase.
pub fn map_phase_index(a: f64, levels: usize) -> usize {
    let a = if a.is_nan() { -1.0 } else { a.clamp(-1.0, 1.0) };
    let target = PI * (a + 1.0);
    let step = 2.0 * PI / levels as f64;
    let lo = ((target / step).floor() as usize).min(levels - 1);
    let hi = (lo + 1).min(levels - 1);
    let d = |i: usize| (i as f64 * step - target).abs();
    if d(hi) < d(lo) {
        hi
    } else {
        lo
    }
}

/// The phase value itself, an exact member of the discrete set.
pub fn map_phase(a: f64, phase_bits: u32) -> f64 {
    phase_value(map_phase_index(a, 1usize << phase_bits), phase_bits)
}

/// Splits a raw action `[N phases | K V2I counts | K V2V counts]` into a
/// decision. Symbol counts are further clamped to the table's range.
pub fn action_to_decision(action: &[f64], sys: &SystemConfig) -> Decision {
    let n = sys.ris_elements();
    let k = sys.num_vehicles();
    assert_eq!(action.len(), n + 2 * k, "action length");
    let levels = sys.radio.phase_levels();
    let (lo, hi) = (sys.table.nu_min(), sys.nu_max());
    let nu = |a: f64| map_nu(a, hi).max(lo);
    Decision {
        phase_index: action[..n].iter().map(|&a| map_phase_index(a, levels)).collect(),
        nu_v2i: action[n..n + k].iter().map(|&a| nu(a)).collect(),
        nu_v2v: action[n + k..].iter().map(|&a| nu(a)).collect(),
    }
}
