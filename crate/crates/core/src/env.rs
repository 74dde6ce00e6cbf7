//! Slot-level environment shared by every decision maker.
//!
//! A slot is frozen into a [`SlotContext`] (task loads, assignments and the
//! channel realization). Any [`Decision`] (RIS phases plus per-link symbol
//! counts) can then be scored against it without touching random state, so
//! PPO, GA, QPSO and the co-phasing heuristic all see identical slots for a
//! given seed.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{to_db, ChannelError, ChannelRealization, RadioConfig, RisPhaseConfig};
use crate::latency::{path_coefficients, ComputeParams, PathCoefficients, VehicleLoad};
use crate::offload::{build_standard_form, oracle_with_deadline, solve_lp, OffloadError, OffloadSplit};
use crate::scenario::{link_index, LinkKind, ScenarioConfig, ScenarioError, ScenarioState};
use crate::semantic::{semantic_rate, SemanticError, SemanticParams, SemanticTable};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Offload(#[from] OffloadError),
    #[error("illegal decision: {0}")]
    IllegalDecision(String),
}

/// Backend used to solve the per-vehicle split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitSolver {
    InteriorPoint,
    ClosedForm,
}

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub scenario: ScenarioConfig,
    pub radio: RadioConfig,
    pub semantic: SemanticParams,
    pub compute: ComputeParams,
    pub table: Arc<SemanticTable>,
    pub solver: SplitSolver,
}

impl SystemConfig {
    pub fn with_synthetic_table(
        scenario: ScenarioConfig,
        radio: RadioConfig,
        semantic: SemanticParams,
        compute: ComputeParams,
        nu_max: u32,
    ) -> Self {
        Self {
            scenario,
            radio,
            semantic,
            compute,
            table: Arc::new(SemanticTable::synthetic(nu_max)),
            solver: SplitSolver::InteriorPoint,
        }
    }

    pub fn nu_max(&self) -> u32 {
        self.table.nu_max()
    }

    pub fn num_vehicles(&self) -> usize {
        self.scenario.num_vehicles
    }

    pub fn ris_elements(&self) -> usize {
        self.radio.ris_elements
    }

    /// Length of the raw action vector: N phase slots plus 2K symbol slots.
    pub fn action_dim(&self) -> usize {
        self.ris_elements() + 2 * self.num_vehicles()
    }
}

/// Upper-layer decision of one slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub phase_index: Vec<usize>,
    pub nu_v2i: Vec<u32>,
    pub nu_v2v: Vec<u32>,
}

impl Decision {
    pub fn nu(&self, vehicle: usize, kind: LinkKind) -> u32 {
        match kind {
            LinkKind::V2i => self.nu_v2i[vehicle],
            LinkKind::V2v => self.nu_v2v[vehicle],
        }
    }

    pub fn uniform(sys: &SystemConfig, nu: u32) -> Self {
        Self {
            phase_index: vec![0; sys.ris_elements()],
            nu_v2i: vec![nu; sys.num_vehicles()],
            nu_v2v: vec![nu; sys.num_vehicles()],
        }
    }

    pub fn check(&self, sys: &SystemConfig) -> Result<(), EnvError> {
        let levels = sys.radio.phase_levels();
        if self.phase_index.len() != sys.ris_elements() {
            return Err(EnvError::IllegalDecision(format!(
                "{} phases for {} elements",
                self.phase_index.len(),
                sys.ris_elements()
            )));
        }
        if let Some(p) = self.phase_index.iter().find(|&&p| p >= levels) {
            return Err(EnvError::IllegalDecision(format!("phase index {p} >= {levels}")));
        }
        let k = sys.num_vehicles();
        if self.nu_v2i.len() != k || self.nu_v2v.len() != k {
            return Err(EnvError::IllegalDecision("symbol counts do not match vehicle count".into()));
        }
        let (lo, hi) = (sys.table.nu_min(), sys.nu_max());
        if let Some(nu) = self
            .nu_v2i
            .iter()
            .chain(&self.nu_v2v)
            .find(|&&nu| nu < lo || nu > hi)
        {
            return Err(EnvError::IllegalDecision(format!("symbol count {nu} outside [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Everything needed to score a decision in one slot.
#[derive(Debug, Clone)]
pub struct SlotContext {
    pub slot_index: u64,
    pub task_bits: Vec<f64>,
    pub sv_of: Vec<usize>,
    /// Task-bearing vehicles sharing the RSU (U_0).
    pub rsu_users: usize,
    /// Task-bearing vehicles sharing each SV (U_j).
    pub sv_users: Vec<usize>,
    pub channel: ChannelRealization,
}

impl SlotContext {
    pub fn capture<R: rand::Rng + ?Sized>(state: &ScenarioState, radio: &RadioConfig, rng: &mut R) -> Self {
        let active: Vec<usize> = (0..state.vehicles.len()).filter(|&k| state.is_active(k)).collect();
        let mut sv_users = vec![0; state.service_vehicles.len()];
        for &k in &active {
            sv_users[state.sv_of[k]] += 1;
        }
        Self {
            slot_index: state.slot_index,
            task_bits: state.task_bits.clone(),
            sv_of: state.sv_of.clone(),
            rsu_users: active.len(),
            sv_users,
            channel: ChannelRealization::draw(state, radio, rng),
        }
    }

    pub fn is_active(&self, vehicle: usize) -> bool {
        self.task_bits[vehicle] > 0.0
    }

    pub fn active_vehicles(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.task_bits.len()).filter(|&k| self.is_active(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub sinr_db: f64,
    /// Symbol count actually transmitted.
    pub nu: u32,
    pub delta: f64,
    pub rate: f64,
    pub meets_threshold: bool,
    /// The requested ν was raised to the smallest feasible one.
    pub projected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleOutcome {
    pub bits: f64,
    pub paths: PathCoefficients,
    pub split: OffloadSplit,
    /// Transmission part of the V2I path delay.
    pub v2i_tx_delay: f64,
    /// Transmission part of the V2V path delay.
    pub v2v_tx_delay: f64,
}

impl VehicleOutcome {
    pub fn total_delay(&self) -> f64 {
        self.split.t_star
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub links: Vec<LinkOutcome>,
    /// `None` for idle vehicles.
    pub vehicles: Vec<Option<VehicleOutcome>>,
    /// Σ_k T_k over task-bearing vehicles.
    pub total_delay: f64,
    /// Active links whose executed similarity is below the threshold.
    pub similarity_violations: usize,
    /// Active vehicles whose optimal delay misses T_max.
    pub deadline_violations: usize,
}

impl SlotOutcome {
    pub fn reward(&self) -> f64 {
        -self.total_delay
    }

    pub fn violations(&self) -> usize {
        self.similarity_violations + self.deadline_violations
    }

    fn active(&self) -> impl Iterator<Item = &VehicleOutcome> {
        self.vehicles.iter().flatten()
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }

    fn mean_of(&self, f: impl Fn(&VehicleOutcome) -> f64) -> f64 {
        let n = self.active_count();
        if n == 0 {
            0.0
        } else {
            self.active().map(f).sum::<f64>() / n as f64
        }
    }

    /// Mean end-to-end delay over task-bearing vehicles.
    pub fn mean_total_delay(&self) -> f64 {
        self.mean_of(VehicleOutcome::total_delay)
    }

    pub fn mean_v2i_delay(&self) -> f64 {
        self.mean_of(|v| v.v2i_tx_delay)
    }

    pub fn mean_v2v_delay(&self) -> f64 {
        self.mean_of(|v| v.v2v_tx_delay)
    }
}

/// Scores `decision` in the slot `ctx`.
///
/// Symbol counts below the smallest ν that reaches the similarity threshold
/// are raised to it; links where no ν reaches the threshold keep the
/// requested ν and are counted as similarity violations.
pub fn evaluate(ctx: &SlotContext, decision: &Decision, sys: &SystemConfig) -> Result<SlotOutcome, EnvError> {
    decision.check(sys)?;
    let phases = RisPhaseConfig::from_indices(decision.phase_index.clone(), sys.radio.phase_bits);
    let threshold = sys.semantic.threshold;
    let k = ctx.task_bits.len();

    let mut links = Vec::with_capacity(2 * k);
    let mut similarity_violations = 0;
    for vehicle in 0..k {
        for kind in LinkKind::ALL {
            let l = link_index(vehicle, kind);
            let sinr_db = to_db(ctx.channel.link_sinr(l, &phases));
            let mut nu = decision.nu(vehicle, kind);
            let mut delta = sys.table.similarity(sinr_db, nu)?;
            let mut projected = false;
            if delta < threshold {
                if let Some(min) = sys.table.min_feasible_nu(sinr_db, threshold) {
                    if min > nu {
                        nu = min;
                        delta = sys.table.similarity(sinr_db, nu)?;
                        projected = true;
                    }
                }
            }
            let meets_threshold = delta >= threshold;
            if !meets_threshold && ctx.is_active(vehicle) {
                similarity_violations += 1;
            }
            links.push(LinkOutcome {
                sinr_db,
                nu,
                delta,
                rate: semantic_rate(&sys.semantic, sys.radio.bandwidth, nu, delta),
                meets_threshold,
                projected,
            });
        }
    }

    let mut vehicles = Vec::with_capacity(k);
    let mut total_delay = 0.0;
    let mut deadline_violations = 0;
    for vehicle in 0..k {
        if !ctx.is_active(vehicle) {
            vehicles.push(None);
            continue;
        }
        let bits = ctx.task_bits[vehicle];
        let v2i = &links[link_index(vehicle, LinkKind::V2i)];
        let v2v = &links[link_index(vehicle, LinkKind::V2v)];
        let load = VehicleLoad {
            bits,
            v2i_rate: v2i.rate,
            v2v_rate: v2v.rate,
            rsu_users: ctx.rsu_users,
            sv_users: ctx.sv_users[ctx.sv_of[vehicle]],
        };
        let paths = path_coefficients(&load, &sys.semantic, &sys.compute);
        let split = match sys.solver {
            SplitSolver::InteriorPoint => solve_lp(&build_standard_form(&paths, sys.compute.max_delay)?)?,
            SplitSolver::ClosedForm => oracle_with_deadline(&paths, sys.compute.max_delay)?,
        };
        if !split.feasible {
            deadline_violations += 1;
        }
        total_delay += split.t_star;
        let units = sys.semantic.sentences(bits) * sys.semantic.units_per_sentence;
        let tx = |rho: f64, rate: f64| if rho > 0.0 { rho * units / rate } else { 0.0 };
        vehicles.push(Some(VehicleOutcome {
            bits,
            paths,
            v2i_tx_delay: tx(split.rho_rsu, v2i.rate),
            v2v_tx_delay: tx(split.rho_sv, v2v.rate),
            split,
        }));
    }

    Ok(SlotOutcome {
        links,
        vehicles,
        total_delay,
        similarity_violations,
        deadline_violations,
    })
}

/// Mixes a per-purpose tag into a seed so independent streams never collide.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_SLOTS: u64 = 1;

/// A running simulation: scenario state, the current slot and the RIS
/// configuration currently applied.
#[derive(Debug, Clone)]
pub struct Environment {
    sys: SystemConfig,
    state: ScenarioState,
    rng: ChaCha8Rng,
    slot: SlotContext,
    phases: RisPhaseConfig,
    evaluations: u64,
}

impl Environment {
    pub fn new(sys: SystemConfig, seed: u64) -> Result<Self, EnvError> {
        sys.radio.validate()?;
        let scenario = ScenarioConfig {
            seed,
            ..sys.scenario.clone()
        };
        let mut state = ScenarioState::new(&scenario)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_SLOTS));
        let slot = prepare_slot(&mut state, &sys, &mut rng);
        let phases = RisPhaseConfig::uniform(sys.ris_elements(), sys.radio.phase_bits);
        Ok(Self {
            sys,
            state,
            rng,
            slot,
            phases,
            evaluations: 0,
        })
    }

    /// Starts a fresh episode; the evaluation counter is kept.
    pub fn reset(&mut self, seed: u64) -> Result<(), EnvError> {
        let evaluations = self.evaluations;
        *self = Self::new(self.sys.clone(), seed)?;
        self.evaluations = evaluations;
        Ok(())
    }

    pub fn system(&self) -> &SystemConfig {
        &self.sys
    }

    pub fn state(&self) -> &ScenarioState {
        &self.state
    }

    pub fn slot(&self) -> &SlotContext {
        &self.slot
    }

    pub fn phases(&self) -> &RisPhaseConfig {
        &self.phases
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Per-link SINR (dB) of the current slot under the RIS configuration
    /// currently applied.
    pub fn current_sinr_db(&self) -> Vec<f64> {
        self.slot.channel.report(&self.phases).sinr_db
    }

    /// Scores a candidate decision for the current slot. Counts as one
    /// fitness evaluation.
    pub fn evaluate(&mut self, decision: &Decision) -> Result<SlotOutcome, EnvError> {
        self.evaluations += 1;
        evaluate(&self.slot, decision, &self.sys)
    }

    /// Scores a batch of candidates for the current slot in parallel. Results
    /// are in input order; counts as one evaluation per candidate.
    pub fn evaluate_batch(&mut self, decisions: &[Decision]) -> Result<Vec<SlotOutcome>, EnvError> {
        use rayon::prelude::*;
        self.evaluations += decisions.len() as u64;
        let (slot, sys) = (&self.slot, &self.sys);
        decisions.par_iter().map(|d| evaluate(slot, d, sys)).collect()
    }

    /// Applies `decision` and moves to the next slot.
    pub fn commit(&mut self, decision: &Decision) {
        self.phases = RisPhaseConfig::from_indices(decision.phase_index.clone(), self.sys.radio.phase_bits);
        self.state.advance(&self.sys.scenario);
        self.slot = prepare_slot(&mut self.state, &self.sys, &mut self.rng);
    }

    pub fn step(&mut self, decision: &Decision) -> Result<SlotOutcome, EnvError> {
        let outcome = self.evaluate(decision)?;
        self.commit(decision);
        Ok(outcome)
    }
}

fn prepare_slot(state: &mut ScenarioState, sys: &SystemConfig, rng: &mut ChaCha8Rng) -> SlotContext {
    state.draw_tasks(&sys.scenario, rng);
    state.assign_service_vehicles(&sys.scenario);
    state.assign_resource_blocks(&sys.scenario);
    SlotContext::capture(state, &sys.radio, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offload::closed_form_oracle;

    pub(crate) fn system(k: usize, j: usize, n: usize) -> SystemConfig {
        SystemConfig::with_synthetic_table(
            ScenarioConfig {
                num_vehicles: k,
                num_service_vehicles: j,
                ..ScenarioConfig::default()
            },
            RadioConfig {
                ris_elements: n,
                ..RadioConfig::default()
            },
            SemanticParams::default(),
            ComputeParams::default(),
            20,
        )
    }

    #[test]
    fn same_seed_same_slots() {
        let sys = system(5, 2, 8);
        let mut a = Environment::new(sys.clone(), 7).unwrap();
        let mut b = Environment::new(sys.clone(), 7).unwrap();
        let d = Decision::uniform(&sys, 5);
        for _ in 0..5 {
            assert_eq!(a.step(&d).unwrap(), b.step(&d).unwrap());
        }
    }

    #[test]
    fn slot_stream_does_not_depend_on_decisions() {
        let sys = system(4, 2, 8);
        let mut a = Environment::new(sys.clone(), 3).unwrap();
        let mut b = Environment::new(sys.clone(), 3).unwrap();
        let d1 = Decision::uniform(&sys, 1);
        let mut d2 = Decision::uniform(&sys, 20);
        d2.phase_index = vec![3; 8];
        for _ in 0..4 {
            a.step(&d1).unwrap();
            b.step(&d2).unwrap();
            assert_eq!(a.slot().task_bits, b.slot().task_bits);
            assert_eq!(a.slot().channel.interference, b.slot().channel.interference);
        }
    }

    #[test]
    fn idle_slot_has_zero_delay() {
        let mut sys = system(3, 1, 4);
        sys.scenario.arrival_mean = 0.0;
        let mut env = Environment::new(sys.clone(), 1).unwrap();
        let out = env.step(&Decision::uniform(&sys, 3)).unwrap();
        assert_eq!(out.total_delay, 0.0);
        assert_eq!(out.reward(), 0.0);
        assert_eq!(out.violations(), 0);
    }

    #[test]
    fn total_delay_matches_oracle_recomputation() {
        let sys = system(6, 2, 8);
        let mut env = Environment::new(sys.clone(), 11).unwrap();
        for _ in 0..10 {
            let out = env.step(&Decision::uniform(&sys, 9)).unwrap();
            let oracle: f64 = out
                .vehicles
                .iter()
                .flatten()
                .map(|v| closed_form_oracle(&v.paths).unwrap().t_star)
                .sum();
            assert!((out.total_delay - oracle).abs() < 1e-6 * (1.0 + oracle));
            assert!(out.reward() <= 0.0);
        }
    }

    #[test]
    fn projection_raises_nu_to_feasible() {
        let sys = system(6, 2, 8);
        let mut env = Environment::new(sys.clone(), 2).unwrap();
        for _ in 0..10 {
            let out = env.step(&Decision::uniform(&sys, 1)).unwrap();
            for l in &out.links {
                match sys.table.min_feasible_nu(l.sinr_db, 0.9) {
                    Some(min) => {
                        assert_eq!(l.nu, min);
                        assert!(l.meets_threshold);
                    }
                    None => assert!(!l.meets_threshold && l.nu == 1),
                }
            }
        }
    }

    #[test]
    fn rejects_illegal_decisions() {
        let sys = system(2, 1, 4);
        let mut env = Environment::new(sys.clone(), 0).unwrap();
        let mut d = Decision::uniform(&sys, 21);
        assert!(matches!(env.evaluate(&d), Err(EnvError::IllegalDecision(_))));
        d = Decision::uniform(&sys, 2);
        d.phase_index[0] = 4;
        assert!(matches!(env.evaluate(&d), Err(EnvError::IllegalDecision(_))));
    }

    #[test]
    fn evaluation_counter() {
        let sys = system(2, 1, 4);
        let mut env = Environment::new(sys.clone(), 0).unwrap();
        let d = Decision::uniform(&sys, 2);
        env.evaluate(&d).unwrap();
        env.step(&d).unwrap();
        env.commit(&d);
        assert_eq!(env.evaluations(), 2);
        env.reset(5).unwrap();
        assert_eq!(env.evaluations(), 2);
    }

    #[test]
    fn solvers_agree() {
        let sys = system(8, 3, 16);
        let mut closed = sys.clone();
        closed.solver = SplitSolver::ClosedForm;
        let mut env = Environment::new(sys.clone(), 4).unwrap();
        let d = Decision::uniform(&sys, 10);
        for _ in 0..5 {
            let a = evaluate(env.slot(), &d, &sys).unwrap();
            let b = evaluate(env.slot(), &d, &closed).unwrap();
            assert!((a.total_delay - b.total_delay).abs() < 1e-6);
            env.commit(&d);
        }
    }
}
