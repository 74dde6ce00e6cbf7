use num_complex::Complex64;

use crate::channel::{best_discrete_phases, phase_value, to_db};
use crate::env::{Decision, SlotContext, SystemConfig};
use crate::scenario::{link_index, LinkKind};
use crate::semantic::SemanticTable;

/// Symbol count with the highest semantic rate factor δ/ν among the counts
/// that meet the similarity threshold, or among all counts when none does.
pub fn rate_optimal_nu(table: &SemanticTable, sinr_db: f64, threshold: f64) -> u32 {
    let mut best: Option<(bool, f64, u32)> = None;
    for nu in table.nu_min()..=table.nu_max() {
        let delta = table.similarity(sinr_db, nu).unwrap_or(0.0);
        let key = (delta >= threshold, delta / nu as f64, nu);
        let better = match best {
            None => true,
            Some((ok, score, _)) => (key.0 && !ok) || (key.0 == ok && key.1 > score),
        };
        if better {
            best = Some(key);
        }
    }
    best.map_or(table.nu_min(), |b| b.2)
}

/// Fixed RIS heuristic without learning.
///
/// Phases start from the optimal discrete co-phasing of the weakest active
/// link and are refined by coordinate ascent on Σ ln(1 + γ_l) over the links
/// of task-bearing vehicles. Each link then takes [`rate_optimal_nu`].
pub fn cophase_decision(ctx: &SlotContext, sys: &SystemConfig) -> Decision {
    let n = sys.ris_elements();
    let bits = sys.radio.phase_bits;
    let levels = sys.radio.phase_levels();
    let k = ctx.task_bits.len();
    let ch = &ctx.channel;

    let active: Vec<usize> = ctx
        .active_vehicles()
        .flat_map(|v| LinkKind::ALL.map(|kind| link_index(v, kind)))
        .collect();
    let denom: Vec<f64> = (0..ch.links.len())
        .map(|l| (ch.interference[l] + ch.noise_power) / ch.tx_power)
        .collect();

    let mut phases = vec![0usize; n];
    let steered: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&l| ch.links[l].ris_coeffs.len() == n)
        .collect();
    if let Some(&worst) = steered.iter().min_by(|&&a, &&b| {
        let g = |l: usize| ch.links[l].direct.norm_sqr() / denom[l];
        g(a).total_cmp(&g(b))
    }) {
        phases = best_discrete_phases(ch.links[worst].direct, &ch.links[worst].ris_coeffs, bits);
    }

    if !steered.is_empty() {
        let rot: Vec<Complex64> = (0..levels).map(|i| Complex64::from_polar(1.0, phase_value(i, bits))).collect();
        let mut signal: Vec<Complex64> = steered
            .iter()
            .map(|&l| {
                let c = &ch.links[l].ris_coeffs;
                ch.links[l].direct + (0..n).map(|e| c[e] * rot[phases[e]]).sum::<Complex64>()
            })
            .collect();
        let utility = |sig: &[Complex64]| -> f64 {
            steered
                .iter()
                .zip(sig)
                .map(|(&l, s)| (s.norm_sqr() / denom[l]).ln_1p())
                .sum()
        };
        let mut current = utility(&signal);
        for _ in 0..20 {
            let mut improved = false;
            for e in 0..n {
                let old = phases[e];
                let mut best = (current, old);
                for cand in (0..levels).filter(|&c| c != old) {
                    let trial: Vec<Complex64> = steered
                        .iter()
                        .zip(&signal)
                        .map(|(&l, s)| {
                            let c = ch.links[l].ris_coeffs[e];
                            s + c * (rot[cand] - rot[old])
                        })
                        .collect();
                    let u = utility(&trial);
                    if u > best.0 * (1.0 + 1e-12) {
                        best = (u, cand);
                    }
                }
                if best.1 != old {
                    for (s, &l) in signal.iter_mut().zip(&steered) {
                        *s += ch.links[l].ris_coeffs[e] * (rot[best.1] - rot[old]);
                    }
                    phases[e] = best.1;
                    current = best.0;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
    }

    let applied = crate::channel::RisPhaseConfig::from_indices(phases.clone(), bits);
    let threshold = sys.semantic.threshold;
    let nu_for = |v: usize, kind: LinkKind| {
        let sinr_db = to_db(ch.link_sinr(link_index(v, kind), &applied));
        rate_optimal_nu(&sys.table, sinr_db, threshold)
    };
    Decision {
        phase_index: phases,
        nu_v2i: (0..k).map(|v| nu_for(v, LinkKind::V2i)).collect(),
        nu_v2v: (0..k).map(|v| nu_for(v, LinkKind::V2v)).collect(),
    }
}
