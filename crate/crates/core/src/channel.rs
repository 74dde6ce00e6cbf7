//! Direct and RIS-cascaded channel gains and per-link SINR.
//!
//! The RIS is modelled as a uniform linear array whose axis runs parallel to
//! the road (the y-axis), so the steering angle of any node is the angle off
//! the array normal: `sin(angle) = Δy / distance`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{link_of, LinkKind, Position, ScenarioState};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reference distance d₀; shorter distances are clamped to it.
pub const REFERENCE_DISTANCE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("vector length mismatch: {left} vs {right} (phases {phases})")]
    LengthMismatch {
        left: usize,
        right: usize,
        phases: usize,
    },
    #[error("`{field}` must be {requirement}, got {value}")]
    Invalid {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Which links see the RIS cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RisLinks {
    All,
    V2iOnly,
    V2vOnly,
}

impl RisLinks {
    pub fn serves(self, kind: LinkKind) -> bool {
        match self {
            RisLinks::All => true,
            RisLinks::V2iOnly => kind == LinkKind::V2i,
            RisLinks::V2vOnly => kind == LinkKind::V2v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Linear power gain at d₀ = 1 m.
    pub ref_loss: f64,
    /// Path-loss exponent of the direct vehicle-to-node links.
    pub path_exp_direct: f64,
    /// Path-loss exponent of the RIS-to-node links.
    pub path_exp_ris_edge: f64,
    /// Path-loss exponent of the vehicle-to-RIS links.
    pub path_exp_user_ris: f64,
    /// Rician factor κ of the RIS-adjacent channels.
    pub rician_factor: f64,
    pub carrier_frequency: f64,
    /// Element spacing in meters; `None` means half a wavelength.
    pub element_spacing: Option<f64>,
    pub ris_elements: usize,
    pub phase_bits: u32,
    pub tx_power: f64,
    pub noise_power: f64,
    pub bandwidth: f64,
    /// Adds a scattered component to the RIS-adjacent channels.
    pub nlos: bool,
    pub ris_links: RisLinks,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            ref_loss: 1e-3,
            path_exp_direct: 3.5,
            path_exp_ris_edge: 2.2,
            path_exp_user_ris: 2.2,
            rician_factor: 3.0,
            carrier_frequency: 5.9e9,
            element_spacing: None,
            ris_elements: 36,
            phase_bits: 2,
            tx_power: 0.2,
            noise_power: 1.44e-10,
            bandwidth: 360e3,
            nlos: false,
            ris_links: RisLinks::All,
        }
    }
}

impl RadioConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    pub fn spacing(&self) -> f64 {
        self.element_spacing.unwrap_or_else(|| self.wavelength() / 2.0)
    }

    pub fn phase_levels(&self) -> usize {
        1usize << self.phase_bits
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let invalid = |field, requirement, value| {
            Err(ChannelError::Invalid {
                field,
                requirement,
                value,
            })
        };
        if !(self.ref_loss > 0.0 && self.ref_loss <= 1.0) {
            return invalid("ref_loss", "in (0, 1]", self.ref_loss);
        }
        for (field, v) in [
            ("path_exp_direct", self.path_exp_direct),
            ("path_exp_ris_edge", self.path_exp_ris_edge),
            ("path_exp_user_ris", self.path_exp_user_ris),
        ] {
            if !(v >= 2.0 && v.is_finite()) {
                return invalid(field, "at least 2", v);
            }
        }
        if !(self.rician_factor >= 0.0) {
            return invalid("rician_factor", "non-negative", self.rician_factor);
        }
        if self.ris_elements == 0 {
            return invalid("ris_elements", "at least 1", 0.0);
        }
        if self.phase_bits == 0 || self.phase_bits > 16 {
            return invalid("phase_bits", "in [1, 16]", self.phase_bits as f64);
        }
        for (field, v) in [
            ("carrier_frequency", self.carrier_frequency),
            ("tx_power", self.tx_power),
            ("noise_power", self.noise_power),
            ("bandwidth", self.bandwidth),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(field, "positive and finite", v);
            }
        }
        if let Some(s) = self.element_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return invalid("element_spacing", "positive and finite", s);
            }
        }
        Ok(())
    }
}

/// Discrete RIS configuration: one phase index in `[0, 2^q)` and one
/// amplitude in `[0, 1]` per element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisPhaseConfig {
    pub phase_bits: u32,
    pub phase_index: Vec<usize>,
    pub amplitude: Vec<f64>,
}

impl RisPhaseConfig {
    pub fn uniform(elements: usize, phase_bits: u32) -> Self {
        Self {
            phase_bits,
            phase_index: vec![0; elements],
            amplitude: vec![1.0; elements],
        }
    }

    pub fn from_indices(phase_index: Vec<usize>, phase_bits: u32) -> Self {
        let amplitude = vec![1.0; phase_index.len()];
        Self {
            phase_bits,
            phase_index,
            amplitude,
        }
    }

    /// RIS switched off: every amplitude zero.
    pub fn off(elements: usize, phase_bits: u32) -> Self {
        Self {
            amplitude: vec![0.0; elements],
            ..Self::uniform(elements, phase_bits)
        }
    }

    pub fn len(&self) -> usize {
        self.phase_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phase_index.is_empty()
    }

    pub fn levels(&self) -> usize {
        1usize << self.phase_bits
    }

    pub fn phase(&self, n: usize) -> f64 {
        phase_value(self.phase_index[n], self.phase_bits)
    }

    /// μ_n·e^{jθ_n} for element `n`.
    pub fn reflection(&self, n: usize) -> Complex64 {
        Complex64::from_polar(self.amplitude[n], self.phase(n))
    }

    pub fn is_legal(&self) -> bool {
        self.phase_index.len() == self.amplitude.len()
            && self.phase_index.iter().all(|&i| i < self.levels())
            && self.amplitude.iter().all(|a| (0.0..=1.0).contains(a))
    }
}

/// θ = 2π·index / 2^q.
pub fn phase_value(index: usize, phase_bits: u32) -> f64 {
    2.0 * PI * index as f64 / (1u64 << phase_bits) as f64
}

/// The discrete phase set Φ.
pub fn phase_set(phase_bits: u32) -> Vec<f64> {
    (0..1usize << phase_bits)
        .map(|i| phase_value(i, phase_bits))
        .collect()
}

/// ULA response `exp(-j·2π/λ·n·D·sin(angle))`, n = 0..N-1.
pub fn steering_vector(angle: f64, elements: usize, spacing: f64, wavelength: f64) -> Vec<Complex64> {
    let k = -2.0 * PI / wavelength * spacing * angle.sin();
    (0..elements)
        .map(|n| Complex64::from_polar(1.0, k * n as f64))
        .collect()
}

/// Angle of `node` off the RIS array normal.
pub fn array_angle(node: &Position, ris: &Position) -> f64 {
    let d = node.distance(ris);
    if d == 0.0 {
        0.0
    } else {
        ((node.y - ris.y) / d).clamp(-1.0, 1.0).asin()
    }
}

fn path_amplitude(dist: f64, exponent: f64, ref_loss: f64) -> f64 {
    (ref_loss * dist.max(REFERENCE_DISTANCE).powf(-exponent)).sqrt()
}

/// Circularly-symmetric complex normal with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Direct-link gain with Rayleigh small-scale fading.
pub fn direct_gain<R: Rng + ?Sized>(dist: f64, exponent: f64, ref_loss: f64, rng: &mut R) -> Complex64 {
    complex_normal(rng) * path_amplitude(dist, exponent, ref_loss)
}

/// LoS part of a Rician RIS channel: `sqrt(l·d^-η)·sqrt(κ/(1+κ))` times the
/// steering vector.
pub fn rician_los_gain(
    dist: f64,
    exponent: f64,
    ref_loss: f64,
    rician_factor: f64,
    steering: &[Complex64],
) -> Vec<Complex64> {
    let amp = path_amplitude(dist, exponent, ref_loss) * los_weight(rician_factor);
    steering.iter().map(|s| s * amp).collect()
}

fn los_weight(kappa: f64) -> f64 {
    if kappa.is_infinite() {
        1.0
    } else {
        (kappa / (1.0 + kappa)).sqrt()
    }
}

fn add_scattered<R: Rng + ?Sized>(
    gain: &mut [Complex64],
    dist: f64,
    exponent: f64,
    ref_loss: f64,
    kappa: f64,
    rng: &mut R,
) {
    if kappa.is_infinite() {
        return;
    }
    let amp = path_amplitude(dist, exponent, ref_loss) * (1.0 / (1.0 + kappa)).sqrt();
    for g in gain.iter_mut() {
        *g += complex_normal(rng) * amp;
    }
}

/// `h_rjᴴ · diag(μ e^{jθ}) · h_kr`.
pub fn cascade(
    ris_to_node: &[Complex64],
    phases: &RisPhaseConfig,
    user_to_ris: &[Complex64],
) -> Result<Complex64, ChannelError> {
    if ris_to_node.len() != user_to_ris.len() || ris_to_node.len() != phases.len() {
        return Err(ChannelError::LengthMismatch {
            left: ris_to_node.len(),
            right: user_to_ris.len(),
            phases: phases.len(),
        });
    }
    Ok(ris_to_node
        .iter()
        .zip(user_to_ris)
        .enumerate()
        .map(|(n, (a, b))| a.conj() * phases.reflection(n) * b)
        .sum())
}

/// `p·|signal|² / (Σ p·g_i + σ²)` where `interferer_gains` holds the power
/// gains |h|² of the co-channel links.
pub fn sinr(signal: Complex64, interferer_gains: &[f64], tx_power: f64, noise_power: f64) -> f64 {
    let interference: f64 = interferer_gains.iter().map(|g| tx_power * g).sum();
    tx_power * signal.norm_sqr() / (interference + noise_power)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Index of the element of Φ nearest to `angle` on the circle.
pub fn quantize_phase(angle: f64, levels: usize) -> usize {
    let step = 2.0 * PI / levels as f64;
    let k = (angle.rem_euclid(2.0 * PI) / step).round() as usize;
    k % levels
}

/// Rotates every cascade term onto the direction of the direct gain, each
/// element rounded to its nearest discrete phase.
pub fn align_with_direct(direct: Complex64, coeffs: &[Complex64], phase_bits: u32) -> Vec<usize> {
    align_to_reference(direct.arg(), coeffs, 1usize << phase_bits)
}

fn align_to_reference(reference: f64, coeffs: &[Complex64], levels: usize) -> Vec<usize> {
    coeffs
        .iter()
        .map(|c| quantize_phase(reference - c.arg(), levels))
        .collect()
}

/// Discrete phases maximizing `|direct + Σ c_n e^{jθ_n}|²`.
///
/// At the optimum every term is the discrete rotation closest to the
/// direction of the resulting sum, so it suffices to sweep that reference
/// direction. The per-element rounding only changes at `N·2^q` breakpoints;
/// one probe per arc between breakpoints (plus the direct-gain direction)
/// covers every distinct candidate.
pub fn best_discrete_phases(direct: Complex64, coeffs: &[Complex64], phase_bits: u32) -> Vec<usize> {
    let levels = 1usize << phase_bits;
    let step = 2.0 * PI / levels as f64;
    let mut breaks: Vec<f64> = coeffs
        .iter()
        .filter(|c| c.norm_sqr() > 0.0)
        .flat_map(|c| (0..levels).map(move |m| (c.arg() + (m as f64 + 0.5) * step).rem_euclid(2.0 * PI)))
        .collect();
    breaks.sort_by(f64::total_cmp);

    let mut probes = vec![direct.arg()];
    for (i, &b) in breaks.iter().enumerate() {
        let next = if i + 1 < breaks.len() {
            breaks[i + 1]
        } else {
            breaks[0] + 2.0 * PI
        };
        probes.push(0.5 * (b + next));
    }

    let mut best = (f64::NEG_INFINITY, Vec::new());
    for psi in probes {
        let idx = align_to_reference(psi, coeffs, levels);
        let total = direct
            + coeffs
                .iter()
                .zip(&idx)
                .map(|(c, &i)| c * Complex64::from_polar(1.0, i as f64 * step))
                .sum::<Complex64>();
        if total.norm_sqr() > best.0 {
            best = (total.norm_sqr(), idx);
        }
    }
    best.1
}

/// One link's channel for a slot: the direct gain and the per-element
/// cascade coefficients `conj(h_rj,n)·h_kr,n` (empty when the RIS does not
/// serve this link).
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub direct: Complex64,
    pub ris_coeffs: Vec<Complex64>,
}

impl LinkChannel {
    pub fn cascade(&self, phases: &RisPhaseConfig) -> Complex64 {
        self.ris_coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * phases.reflection(n))
            .sum()
    }
}

/// Random channel state of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub links: Vec<LinkChannel>,
    /// Co-channel interference power (without noise) seen by each link.
    pub interference: Vec<f64>,
    /// Angle of arrival at the RIS of every vehicle user.
    pub aoa: Vec<f64>,
    pub tx_power: f64,
    pub noise_power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelReport {
    pub direct: Vec<Complex64>,
    pub cascade: Vec<Complex64>,
    pub sinr: Vec<f64>,
    pub sinr_db: Vec<f64>,
}

impl ChannelRealization {
    /// Draws the slot's fading. Exactly two normals are consumed per link
    /// when `nlos` is off, so the stream is independent of the RIS size.
    pub fn draw<R: Rng + ?Sized>(state: &ScenarioState, radio: &RadioConfig, rng: &mut R) -> Self {
        let n = radio.ris_elements;
        let (spacing, wavelength) = (radio.spacing(), radio.wavelength());
        let kappa = radio.rician_factor;
        let ris = state.ris;

        let user_ris: Vec<(f64, f64)> = state
            .vehicles
            .iter()
            .map(|v| (v.distance(&ris), array_angle(v, &ris)))
            .collect();
        let num_links = 2 * state.vehicles.len();
        let mut links = Vec::with_capacity(num_links);
        for l in 0..num_links {
            let (k, kind) = link_of(l);
            let node = match kind {
                LinkKind::V2i => state.rsu,
                LinkKind::V2v => state.service_vehicles[state.sv_of[k]],
            };
            let direct = direct_gain(
                state.vehicles[k].distance(&node),
                radio.path_exp_direct,
                radio.ref_loss,
                rng,
            );
            let ris_coeffs = if radio.ris_links.serves(kind) {
                let (d_kr, aoa) = user_ris[k];
                let d_rj = node.distance(&ris);
                let mut h_rj = rician_los_gain(
                    d_rj,
                    radio.path_exp_ris_edge,
                    radio.ref_loss,
                    kappa,
                    &steering_vector(array_angle(&node, &ris), n, spacing, wavelength),
                );
                let mut h_kr = rician_los_gain(
                    d_kr,
                    radio.path_exp_user_ris,
                    radio.ref_loss,
                    kappa,
                    &steering_vector(aoa, n, spacing, wavelength),
                );
                if radio.nlos {
                    add_scattered(&mut h_rj, d_rj, radio.path_exp_ris_edge, radio.ref_loss, kappa, rng);
                    add_scattered(&mut h_kr, d_kr, radio.path_exp_user_ris, radio.ref_loss, kappa, rng);
                }
                h_rj.iter().zip(&h_kr).map(|(a, b)| a.conj() * b).collect()
            } else {
                Vec::new()
            };
            links.push(LinkChannel { direct, ris_coeffs });
        }

        // Interference from co-channel links of vehicles that transmit this slot.
        let interference = (0..num_links)
            .map(|l| {
                (0..num_links)
                    .filter(|&o| {
                        o != l && state.rb_of[o] == state.rb_of[l] && state.is_active(link_of(o).0)
                    })
                    .map(|o| radio.tx_power * links[o].direct.norm_sqr())
                    .sum()
            })
            .collect();

        Self {
            links,
            interference,
            aoa: user_ris.iter().map(|&(_, a)| a).collect(),
            tx_power: radio.tx_power,
            noise_power: radio.noise_power,
        }
    }

    pub fn link_sinr(&self, link: usize, phases: &RisPhaseConfig) -> f64 {
        let ch = &self.links[link];
        let signal = ch.direct + ch.cascade(phases);
        self.tx_power * signal.norm_sqr() / (self.interference[link] + self.noise_power)
    }

    pub fn report(&self, phases: &RisPhaseConfig) -> ChannelReport {
        let cascade: Vec<Complex64> = self.links.iter().map(|l| l.cascade(phases)).collect();
        let sinr: Vec<f64> = self
            .links
            .iter()
            .zip(&cascade)
            .zip(&self.interference)
            .map(|((l, c), i)| self.tx_power * (l.direct + c).norm_sqr() / (i + self.noise_power))
            .collect();
        ChannelReport {
            direct: self.links.iter().map(|l| l.direct).collect(),
            sinr_db: sinr.iter().map(|&s| to_db(s)).collect(),
            cascade,
            sinr,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let v = steering_vector(0.0, 8, 0.025, 0.05);
        assert!(v.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_unit_modulus() {
        for angle in [-1.2, -0.3, 0.0, 0.7, 1.5] {
            let v = steering_vector(angle, 16, 0.03, 0.05);
            assert!(v.iter().all(|c| (c.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn steering_half_wavelength_endfire() {
        let v = steering_vector(PI / 2.0, 2, 0.5, 1.0);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((v[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn direct_gain_mean_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (l, d, eta) = (1e-3, 10.0, 3.5);
        let expected = l * f64::powf(d, -eta);
        assert!(close(expected, 3.16227766e-7, 1e-8));
        let draws = 50_000;
        let powers: Vec<f64> = (0..draws)
            .map(|_| direct_gain(d, eta, l, &mut rng).norm_sqr())
            .collect();
        let mean = powers.iter().sum::<f64>() / draws as f64;
        // |g|² is Exp(1) so its standard deviation equals its mean
        let sigma = expected / (draws as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * sigma, "{mean} vs {expected}");
    }

    #[test]
    fn direct_gain_inverse_square() {
        // same fading draw for both distances
        let a = direct_gain(10.0, 2.0, 1e-3, &mut ChaCha8Rng::seed_from_u64(1));
        let b = direct_gain(20.0, 2.0, 1e-3, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(close(a.norm_sqr() / 4.0, b.norm_sqr(), 1e-12));
    }

    #[test]
    fn distance_clamped_at_reference() {
        let a = direct_gain(0.1, 3.5, 1e-3, &mut ChaCha8Rng::seed_from_u64(1));
        let b = direct_gain(1.0, 3.5, 1e-3, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
    }

    #[test]
    fn rician_limits() {
        let s = steering_vector(0.4, 4, 0.5, 1.0);
        let inf = rician_los_gain(3.0, 2.2, 1e-3, f64::INFINITY, &s);
        let amp = (1e-3 * f64::powf(3.0, -2.2)).sqrt();
        assert!(inf.iter().all(|g| close(g.norm(), amp, 1e-12)));
        let huge = rician_los_gain(3.0, 2.2, 1e-3, 1e12, &s);
        assert!(huge.iter().all(|g| close(g.norm(), amp, 1e-9)));

        let zero = rician_los_gain(3.0, 2.2, 1e-3, 0.0, &s);
        assert!(zero.iter().all(|g| g.norm() == 0.0));

        let unit = rician_los_gain(1.0, 2.2, 1.0, 1.0, &s);
        assert!(unit.iter().all(|g| close(g.norm(), 0.5f64.sqrt(), 1e-12)));
    }

    #[test]
    fn cascade_basics() {
        let h = vec![Complex64::new(1.0, 0.0)];
        let mut phases = RisPhaseConfig::from_indices(vec![2], 2);
        let c = cascade(&h, &phases, &h).unwrap();
        assert!((c - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        phases.amplitude = vec![0.0];
        assert_eq!(cascade(&h, &phases, &h).unwrap().norm(), 0.0);

        let short = RisPhaseConfig::uniform(2, 2);
        assert!(matches!(
            cascade(&h, &short, &h),
            Err(ChannelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn sinr_examples() {
        let (p, noise): (f64, f64) = (0.2, 1.44e-10);
        let unit = Complex64::new((noise / p).sqrt(), 0.0);
        assert!(close(sinr(unit, &[], p, noise), 1.0, 1e-12));

        let sig = Complex64::new(1e-9f64.sqrt(), 0.0);
        let g = sinr(sig, &[], p, noise);
        assert!(close(g, 1.388_888_888_9, 1e-9), "{g}");
        assert!(sinr(sig, &[1e-12], p, noise) < g);
    }

    fn exhaustive_best(direct: Complex64, coeffs: &[Complex64], bits: u32) -> f64 {
        let levels = 1usize << bits;
        let n = coeffs.len();
        (0..levels.pow(n as u32))
            .map(|mut code| {
                let mut s = direct;
                for c in coeffs {
                    s += c * Complex64::from_polar(1.0, phase_value(code % levels, bits));
                    code /= levels;
                }
                s.norm_sqr()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn value(direct: Complex64, coeffs: &[Complex64], idx: &[usize], bits: u32) -> f64 {
        (direct
            + coeffs
                .iter()
                .zip(idx)
                .map(|(c, &i)| c * Complex64::from_polar(1.0, phase_value(i, bits)))
                .sum::<Complex64>())
        .norm_sqr()
    }

    #[test]
    fn sweep_matches_exhaustive_on_hard_instances() {
        // cascade terms comparable to or larger than the direct path
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let bits = rng.random_range(1..=2);
            let direct = complex_normal(&mut rng) * rng.random_range(0.0..2.0);
            let coeffs: Vec<_> = (0..n).map(|_| complex_normal(&mut rng)).collect();
            let idx = best_discrete_phases(direct, &coeffs, bits);
            let got = value(direct, &coeffs, &idx, bits);
            let best = exhaustive_best(direct, &coeffs, bits);
            assert!(got >= best * (1.0 - 1e-12), "{got} < {best}");
        }
    }

    #[test]
    fn quantize_wraps() {
        assert_eq!(quantize_phase(2.0 * PI - 1e-6, 4), 0);
        assert_eq!(quantize_phase(-PI / 2.0, 4), 3);
        assert_eq!(quantize_phase(PI, 4), 2);
    }

    #[test]
    fn phase_set_members() {
        let set = phase_set(2);
        assert_eq!(set, vec![0.0, PI / 2.0, PI, 3.0 * PI / 2.0]);
        let cfg = RisPhaseConfig::from_indices(vec![0, 1, 2, 3], 2);
        for n in 0..4 {
            assert_eq!(cfg.phase(n), set[n]);
        }
    }

    #[test]
    fn validate_rejects_small_exponent() {
        let r = RadioConfig {
            path_exp_direct: 1.5,
            ..RadioConfig::default()
        };
        assert!(matches!(
            r.validate(),
            Err(ChannelError::Invalid { field: "path_exp_direct", .. })
        ));
        assert!(RadioConfig::default().validate().is_ok());
    }

    #[test]
    fn default_wavelength() {
        let r = RadioConfig::default();
        assert!((r.wavelength() - 0.0508).abs() < 1e-4);
        assert_eq!(r.spacing(), r.wavelength() / 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn sinr_monotone(sig in 1e-12f64..1e-6, p1 in 0.01f64..1.0, p2 in 0.01f64..1.0,
                             n1 in 1e-12f64..1e-9, n2 in 1e-12f64..1e-9) {
                let s = Complex64::new(sig.sqrt(), 0.0);
                let (lo_p, hi_p) = (p1.min(p2), p1.max(p2));
                prop_assert!(sinr(s, &[], lo_p, n1) <= sinr(s, &[], hi_p, n1));
                let (lo_n, hi_n) = (n1.min(n2), n1.max(n2));
                prop_assert!(sinr(s, &[], p1, hi_n) <= sinr(s, &[], p1, lo_n));
            }

            #[test]
            fn quantized_phases_are_members(angle in -20.0f64..20.0, bits in 1u32..5) {
                let levels = 1usize << bits;
                let i = quantize_phase(angle, levels);
                prop_assert!(i < levels);
                let set = phase_set(bits);
                prop_assert!(set.contains(&phase_value(i, bits)));
            }
        }
    }
}
