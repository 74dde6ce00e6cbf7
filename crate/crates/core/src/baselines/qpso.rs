use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, score_genomes, BaselineError, Candidate, Fitness, SearchResult, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpsoParams {
    pub population: usize,
    /// Contraction-expansion coefficient at the first iteration.
    pub beta_start: f64,
    /// ... and at the last one; linear in between.
    pub beta_end: f64,
}

impl Default for QpsoParams {
    fn default() -> Self {
        Self {
            population: 50,
            beta_start: 1.0,
            beta_end: 0.5,
        }
    }
}

/// Quantum-behaved PSO over continuous positions, rounded to the nearest
/// legal gene for every evaluation. Spends exactly `budget` evaluations.
pub fn qpso_optimize<F: Fitness + ?Sized, R: Rng + ?Sized>(
    space: &SearchSpace,
    fitness: &mut F,
    budget: usize,
    params: &QpsoParams,
    rng: &mut R,
) -> Result<SearchResult, BaselineError> {
    let pop_size = params.population;
    if pop_size == 0 {
        return Err(BaselineError::EmptyPopulation);
    }
    if budget < pop_size {
        return Err(BaselineError::BudgetTooSmall {
            budget,
            population: pop_size,
        });
    }
    let len = space.genome_len();
    let round = |x: &[f64]| -> Vec<u32> { x.iter().enumerate().map(|(i, &v)| space.round_gene(i, v)).collect() };

    let mut pos: Vec<Vec<f64>> = (0..pop_size)
        .map(|_| space.random(rng).into_iter().map(f64::from).collect())
        .collect();
    let genomes: Vec<Vec<u32>> = pos.iter().map(|x| round(x)).collect();
    let fit = score_genomes(space, fitness, &genomes)?;
    let mut evaluations = pop_size;

    let mut pbest = pos.clone();
    let mut pbest_genes = genomes;
    let mut pbest_fit = fit;
    let mut g = argmin(&pbest_fit);
    let mut history = vec![pbest_fit[g]];

    let iterations = (budget - pop_size).div_ceil(pop_size);
    for t in 0..iterations {
        let frac = if iterations > 1 { t as f64 / (iterations - 1) as f64 } else { 0.0 };
        let beta = params.beta_start + (params.beta_end - params.beta_start) * frac;
        let mbest: Vec<f64> = (0..len)
            .map(|d| pbest.iter().map(|p| p[d]).sum::<f64>() / pop_size as f64)
            .collect();

        let movers = pop_size.min(budget - evaluations);
        for (i, x) in pos.iter_mut().enumerate().take(movers) {
            for d in 0..len {
                let phi: f64 = rng.random();
                let attractor = phi * pbest[i][d] + (1.0 - phi) * pbest[g][d];
                // u ∈ (0, 1] keeps ln(1/u) finite
                let u: f64 = 1.0 - rng.random::<f64>();
                let spread = beta * (mbest[d] - x[d]).abs() * (1.0 / u).ln();
                let next = if rng.random_bool(0.5) { attractor + spread } else { attractor - spread };
                let (lo, hi) = space.bounds(d);
                x[d] = next.clamp(lo as f64 - 0.5, hi as f64 + 0.5);
            }
        }
        let genomes: Vec<Vec<u32>> = pos[..movers].iter().map(|x| round(x)).collect();
        let fit = score_genomes(space, fitness, &genomes)?;
        evaluations += movers;

        for (i, (genes, f)) in genomes.into_iter().zip(fit).enumerate() {
            if f < pbest_fit[i] {
                pbest_fit[i] = f;
                pbest[i] = pos[i].clone();
                pbest_genes[i] = genes;
            }
        }
        g = argmin(&pbest_fit);
        history.push(pbest_fit[g]);
    }

    Ok(SearchResult {
        best: Candidate::from_genes(space, &pbest_genes[g], pbest_fit[g]),
        evaluations,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::super::testing::{exhaustive, tiny_env};
    use super::super::FnFitness;
    use super::*;
    use crate::env::Decision;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space() -> SearchSpace {
        SearchSpace {
            elements: 4,
            phase_levels: 4,
            vehicles: 2,
            nu_min: 1,
            nu_max: 10,
        }
    }

    fn toy(d: &Decision) -> f64 {
        let p: f64 = d.phase_index.iter().map(|&p| (3 - p as i64).pow(2) as f64).sum();
        let n: f64 = d.nu_v2i.iter().chain(&d.nu_v2v).map(|&n| (n as f64 - 7.0).powi(2)).sum();
        p + n
    }

    #[test]
    fn spends_exact_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for budget in [50, 51, 99, 100, 137, 2000] {
            let r = qpso_optimize(&space(), &mut FnFitness(toy), budget, &QpsoParams::default(), &mut rng).unwrap();
            assert_eq!(r.evaluations, budget);
        }
    }

    #[test]
    fn global_best_is_monotone() {
        let r = qpso_optimize(&space(), &mut FnFitness(toy), 3000, &QpsoParams::default(), &mut ChaCha8Rng::seed_from_u64(5))
            .unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best.fitness, 0.0);
    }

    #[test]
    fn zero_beta_collapses_to_attractors() {
        // With β = 0 every position becomes a convex combination of personal
        // and global bests, so no gene can leave their hull.
        let s = space();
        let params = QpsoParams {
            population: 10,
            beta_start: 0.0,
            beta_end: 0.0,
        };
        let mut calls = 0;
        let mut seen = Vec::new();
        let mut record = |d: &Decision| {
            calls += 1;
            seen.push(s.genes(d));
            toy(d)
        };
        qpso_optimize(&s, &mut FnFitness(&mut record), 200, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let (init, later) = seen.split_at(10);
        for d in 0..s.genome_len() {
            let lo = init.iter().map(|g| g[d]).min().unwrap();
            let hi = init.iter().map(|g| g[d]).max().unwrap();
            assert!(later.iter().all(|g| (lo..=hi).contains(&g[d])));
        }
        assert_eq!(calls, 200);
    }

    #[test]
    fn candidates_stay_legal() {
        let s = space();
        let mut seen_illegal = false;
        let mut check = |d: &Decision| {
            seen_illegal |= !s.is_legal(&s.genes(d));
            toy(d)
        };
        qpso_optimize(&s, &mut FnFitness(&mut check), 1000, &QpsoParams::default(), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert!(!seen_illegal);
    }

    #[test]
    fn finds_tiny_instance_optimum() {
        let env = tiny_env(4);
        let space = SearchSpace::from_system(env.system());
        let opt = exhaustive(&space, env.slot(), env.system());
        let mut hits = 0;
        for seed in 0..100 {
            let mut e = env.clone();
            let r = qpso_optimize(&space, &mut e, 1000, &QpsoParams::default(), &mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap();
            if r.best.fitness <= opt + 1e-9 * opt.abs().max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "QPSO hit the exhaustive optimum in {hits}/100 runs");
    }
}
