//! Per-slot search baselines over the discrete decision vector: a genetic
//! algorithm, quantum-behaved PSO and a fixed co-phasing heuristic.
//!
//! A genome is `N` phase indices followed by `K` V2I and `K` V2V symbol
//! counts. GA and QPSO consume an exact evaluation budget so that they can
//! be compared with the PPO agent at equal cost.

mod cophase;
mod ga;
mod qpso;

pub use cophase::{cophase_decision, rate_optimal_nu};
pub use ga::{ga_optimize, GaParams};
pub use qpso::{qpso_optimize, QpsoParams};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{Decision, EnvError, Environment, SystemConfig};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("budget {budget} is smaller than the population {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Bounds of every gene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub elements: usize,
    pub phase_levels: u32,
    pub vehicles: usize,
    pub nu_min: u32,
    pub nu_max: u32,
}

impl SearchSpace {
    pub fn from_system(sys: &SystemConfig) -> Self {
        Self {
            elements: sys.ris_elements(),
            phase_levels: sys.radio.phase_levels() as u32,
            vehicles: sys.num_vehicles(),
            nu_min: sys.table.nu_min(),
            nu_max: sys.nu_max(),
        }
    }

    pub fn genome_len(&self) -> usize {
        self.elements + 2 * self.vehicles
    }

    /// Inclusive bounds of gene `i`.
    pub fn bounds(&self, i: usize) -> (u32, u32) {
        if i < self.elements {
            (0, self.phase_levels - 1)
        } else {
            (self.nu_min, self.nu_max)
        }
    }

    pub fn random_gene<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> u32 {
        let (lo, hi) = self.bounds(i);
        rng.random_range(lo..=hi)
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u32> {
        (0..self.genome_len()).map(|i| self.random_gene(i, rng)).collect()
    }

    pub fn is_legal(&self, genes: &[u32]) -> bool {
        genes.len() == self.genome_len()
            && genes.iter().enumerate().all(|(i, &g)| {
                let (lo, hi) = self.bounds(i);
                (lo..=hi).contains(&g)
            })
    }

    /// Nearest legal gene to a continuous position.
    pub fn round_gene(&self, i: usize, x: f64) -> u32 {
        let (lo, hi) = self.bounds(i);
        x.round().clamp(lo as f64, hi as f64) as u32
    }

    pub fn decision(&self, genes: &[u32]) -> Decision {
        let (phases, nu) = genes.split_at(self.elements);
        let (v2i, v2v) = nu.split_at(self.vehicles);
        Decision {
            phase_index: phases.iter().map(|&g| g as usize).collect(),
            nu_v2i: v2i.to_vec(),
            nu_v2v: v2v.to_vec(),
        }
    }

    pub fn genes(&self, decision: &Decision) -> Vec<u32> {
        decision
            .phase_index
            .iter()
            .map(|&p| p as u32)
            .chain(decision.nu_v2i.iter().copied())
            .chain(decision.nu_v2v.iter().copied())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub phase_index: Vec<usize>,
    /// K V2I counts followed by K V2V counts.
    pub nu: Vec<u32>,
    /// Total delay in seconds; lower is better.
    pub fitness: f64,
}

impl Candidate {
    fn from_genes(space: &SearchSpace, genes: &[u32], fitness: f64) -> Self {
        let d = space.decision(genes);
        Self {
            phase_index: d.phase_index,
            nu: d.nu_v2i.into_iter().chain(d.nu_v2v).collect(),
            fitness,
        }
    }

    pub fn decision(&self) -> Decision {
        let k = self.nu.len() / 2;
        Decision {
            phase_index: self.phase_index.clone(),
            nu_v2i: self.nu[..k].to_vec(),
            nu_v2v: self.nu[k..].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: Candidate,
    pub evaluations: usize,
    /// Best fitness after each generation (the first entry is the initial
    /// population).
    pub history: Vec<f64>,
}

/// Scores candidate decisions; lower is better, results in input order.
pub trait Fitness {
    fn score(&mut self, batch: &[Decision]) -> Result<Vec<f64>, EnvError>;
}

/// Total delay of the current slot.
impl Fitness for Environment {
    fn score(&mut self, batch: &[Decision]) -> Result<Vec<f64>, EnvError> {
        Ok(self.evaluate_batch(batch)?.iter().map(|o| o.total_delay).collect())
    }
}

/// Adapter for plain closures.
pub struct FnFitness<F>(pub F);

impl<F: FnMut(&Decision) -> f64> Fitness for FnFitness<F> {
    fn score(&mut self, batch: &[Decision]) -> Result<Vec<f64>, EnvError> {
        Ok(batch.iter().map(&mut self.0).collect())
    }
}

fn score_genomes<F: Fitness + ?Sized>(
    space: &SearchSpace,
    fitness: &mut F,
    genomes: &[Vec<u32>],
) -> Result<Vec<f64>, EnvError> {
    let decisions: Vec<Decision> = genomes.iter().map(|g| space.decision(g)).collect();
    let scores = fitness.score(&decisions)?;
    // a NaN must never win a comparison
    Ok(scores.into_iter().map(|f| if f.is_nan() { f64::INFINITY } else { f }).collect())
}

/// Index of the smallest value; the first one wins ties.
fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < values[best] { i } else { best })
}


#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn genome_round_trip() {
        let space = SearchSpace {
            elements: 3,
            phase_levels: 4,
            vehicles: 2,
            nu_min: 1,
            nu_max: 20,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let g = space.random(&mut rng);
            assert!(space.is_legal(&g));
            assert_eq!(space.genes(&space.decision(&g)), g);
        }
        assert_eq!(space.round_gene(0, 7.2), 3);
        assert_eq!(space.round_gene(4, -3.0), 1);
        assert_eq!(space.round_gene(4, 2.5), 3);
        assert!(!space.is_legal(&[0, 0, 4, 1, 1, 1, 1]));
    }

    #[test]
    fn candidate_decision_layout() {
        let c = Candidate {
            phase_index: vec![1, 2],
            nu: vec![3, 4, 5, 6],
            fitness: 0.0,
        };
        let d = c.decision();
        assert_eq!(d.nu_v2i, vec![3, 4]);
        assert_eq!(d.nu_v2v, vec![5, 6]);
    }

    #[test]
    fn argmin_first_tie() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0, 2.0]), 1);
    }
}
