use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmin, score_genomes, BaselineError, Candidate, Fitness, SearchResult, SearchSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population: usize,
    pub tournament: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` means 1/genome length.
    pub mutation_rate: Option<f64>,
    pub elites: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 50,
            tournament: 3,
            crossover_rate: 0.9,
            mutation_rate: None,
            elites: 1,
        }
    }
}

fn tournament<R: Rng + ?Sized>(fitness: &[f64], size: usize, rng: &mut R) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
        }
    }
    best
}

/// Generational GA with tournament selection, uniform crossover, uniform
/// resampling mutation and elitism. Spends exactly `budget` evaluations.
pub fn ga_optimize<F: Fitness + ?Sized, R: Rng + ?Sized>(
    space: &SearchSpace,
    fitness: &mut F,
    budget: usize,
    params: &GaParams,
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
    let mutation = params.mutation_rate.unwrap_or(1.0 / len.max(1) as f64);
    let elites = params.elites.min(pop_size);

    let mut pop: Vec<Vec<u32>> = (0..pop_size).map(|_| space.random(rng)).collect();
    let mut fit = score_genomes(space, fitness, &pop)?;
    let mut evaluations = pop_size;
    let mut history = vec![fit[argmin(&fit)]];

    while evaluations < budget {
        let mut order: Vec<usize> = (0..pop_size).collect();
        order.sort_by(|&a, &b| fit[a].total_cmp(&fit[b]));

        let n_children = (pop_size - elites).min(budget - evaluations);
        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let a = &pop[tournament(&fit, params.tournament, rng)];
            let mut child = if rng.random_bool(params.crossover_rate) {
                let b = &pop[tournament(&fit, params.tournament, rng)];
                (0..len).map(|i| if rng.random_bool(0.5) { a[i] } else { b[i] }).collect()
            } else {
                a.clone()
            };
            for (i, gene) in child.iter_mut().enumerate() {
                if rng.random::<f64>() < mutation {
                    *gene = space.random_gene(i, rng);
                }
            }
            children.push(child);
        }
        let child_fit = score_genomes(space, fitness, &children)?;
        evaluations += n_children;

        // elites, then children, then (on a truncated last generation) the
        // best survivors of the old population
        let keep = pop_size - n_children;
        let mut next: Vec<Vec<u32>> = order[..keep].iter().map(|&i| pop[i].clone()).collect();
        let mut next_fit: Vec<f64> = order[..keep].iter().map(|&i| fit[i]).collect();
        next.extend(children);
        next_fit.extend(child_fit);
        pop = next;
        fit = next_fit;
        history.push(fit[argmin(&fit)]);
    }

    let b = argmin(&fit);
    Ok(SearchResult {
        best: Candidate::from_genes(space, &pop[b], fit[b]),
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

    /// Separable toy objective with a unique optimum at phases 3, ν = 7.
    fn toy(d: &Decision) -> f64 {
        let p: f64 = d.phase_index.iter().map(|&p| (3 - p as i64).pow(2) as f64).sum();
        let n: f64 = d.nu_v2i.iter().chain(&d.nu_v2v).map(|&n| (n as f64 - 7.0).powi(2)).sum();
        p + n
    }

    #[test]
    fn spends_exact_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for budget in [50, 51, 99, 100, 137, 2000] {
            let r = ga_optimize(&space(), &mut FnFitness(toy), budget, &GaParams::default(), &mut rng).unwrap();
            assert_eq!(r.evaluations, budget);
        }
    }

    #[test]
    fn budget_equal_to_population_returns_initial_best() {
        let params = GaParams::default();
        let r = ga_optimize(&space(), &mut FnFitness(toy), 50, &params, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let init: Vec<f64> = (0..50).map(|_| toy(&space().decision(&space().random(&mut rng)))).collect();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.best.fitness, init.iter().cloned().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn elite_never_worsens() {
        let r = ga_optimize(&space(), &mut FnFitness(toy), 3000, &GaParams::default(), &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(r.best.fitness, 0.0);
    }

    #[test]
    fn candidates_stay_legal() {
        let s = space();
        let mut seen_illegal = false;
        let mut check = |d: &Decision| {
            seen_illegal |= !s.is_legal(&s.genes(d));
            toy(d)
        };
        ga_optimize(&s, &mut FnFitness(&mut check), 1000, &GaParams::default(), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert!(!seen_illegal);
    }

    #[test]
    fn rejects_small_budget() {
        let r = ga_optimize(&space(), &mut FnFitness(toy), 10, &GaParams::default(), &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(BaselineError::BudgetTooSmall { .. })));
    }

    #[test]
    fn finds_tiny_instance_optimum() {
        let env = tiny_env(4);
        let space = SearchSpace::from_system(env.system());
        let opt = exhaustive(&space, env.slot(), env.system());
        let mut hits = 0;
        for seed in 0..100 {
            let mut e = env.clone();
            let r = ga_optimize(&space, &mut e, 1000, &GaParams::default(), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            if r.best.fitness <= opt + 1e-9 * opt.abs().max(1.0) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "GA hit the exhaustive optimum in {hits}/100 runs");
    }
}
