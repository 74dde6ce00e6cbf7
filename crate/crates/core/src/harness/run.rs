//! Experiment orchestration: training, evaluation of every method on
//! shared slot streams, and sweeps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Method, SweepAxis};
use super::manifest::Manifest;
use super::metrics::*;
use super::HarnessError;
use crate::agent::{train_agent, Agent, Checkpoint};
use crate::baselines::{cophase_decision, ga_optimize, qpso_optimize, GaParams, QpsoParams, SearchSpace};
use crate::env::{derive_seed, evaluate, Decision, Environment, SlotOutcome, SystemConfig};

const STREAM_EVAL: u64 = 2_000_000;
const STREAM_METHOD: u64 = 3_000_000;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const REWARD_CURVE_FILE: &str = "reward_curve.csv";
pub const EPISODE_DELAYS_FILE: &str = "episode_delays.csv";
pub const FAILURES_FILE: &str = "failures.csv";

pub fn metrics_file(method: Method) -> String {
    format!("metrics_{}.csv", method.name())
}

/// Scenario seed of test round `round` under experiment seed `seed`. Every
/// method sees the same slot stream for a given (seed, round).
pub fn eval_seed(seed: u64, round: usize) -> u64 {
    derive_seed(seed, STREAM_EVAL + round as u64)
}

/// Per-slot decision rule under evaluation.
#[derive(Debug, Clone)]
pub enum Controller<'a> {
    /// Deterministic action when `budget ≤ 1`, otherwise the best of the
    /// deterministic action and `budget − 1` policy samples.
    Ppo { agent: &'a Agent, budget: usize },
    Ga { params: GaParams, budget: usize },
    Qpso { params: QpsoParams, budget: usize },
    Cophase,
}

impl Controller<'_> {
    pub fn method(&self) -> Method {
        match self {
            Controller::Ppo { .. } => Method::Ppo,
            Controller::Ga { .. } => Method::Ga,
            Controller::Qpso { .. } => Method::Qpso,
            Controller::Cophase => Method::Cophase,
        }
    }

    /// Fitness evaluations the controller must spend per slot.
    pub fn evaluations_per_slot(&self) -> u64 {
        match *self {
            Controller::Ppo { budget, .. } => budget.max(1) as u64,
            Controller::Ga { budget, .. } | Controller::Qpso { budget, .. } => budget as u64,
            Controller::Cophase => 1,
        }
    }

    fn decide(
        &self,
        env: &mut Environment,
        space: &SearchSpace,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Decision, SlotOutcome), HarnessError> {
        let searched = |env: &Environment, d: Decision| -> Result<(Decision, SlotOutcome), HarnessError> {
            // re-scoring the returned candidate is not a search evaluation
            let outcome = evaluate(env.slot(), &d, env.system())?;
            Ok((d, outcome))
        };
        match self {
            Controller::Ppo { agent, budget } => Ok(agent.decide_with_budget(env, *budget, rng)?),
            Controller::Ga { params, budget } => {
                let r = ga_optimize(space, env, *budget, params, rng)?;
                searched(env, r.best.decision())
            }
            Controller::Qpso { params, budget } => {
                let r = qpso_optimize(space, env, *budget, params, rng)?;
                searched(env, r.best.decision())
            }
            Controller::Cophase => {
                let d = cophase_decision(env.slot(), env.system());
                let outcome = env.evaluate(&d)?;
                Ok((d, outcome))
            }
        }
    }
}

/// Identifies a run in the output files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub run_id: String,
    pub seed: u64,
    pub sweep_value: Option<f64>,
}

impl RunLabel {
    pub fn new(axis: SweepAxis, value: Option<f64>, seed: u64) -> Self {
        let run_id = match value {
            Some(v) => format!("{}{v}_s{seed}", axis.name()),
            None => format!("s{seed}"),
        };
        Self {
            run_id,
            seed,
            sweep_value: value,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalRun {
    pub records: Vec<MetricsRecord>,
    pub episodes: Vec<EpisodeDelay>,
}

impl EvalRun {
    pub fn mean_total_delay(&self) -> f64 {
        mean(self.records.iter().map(|r| r.mean_total_delay))
    }

    pub fn mean_v2i_delay(&self) -> f64 {
        mean(self.records.iter().map(|r| r.mean_v2i_delay))
    }

    pub fn mean_v2v_delay(&self) -> f64 {
        mean(self.records.iter().map(|r| r.mean_v2v_delay))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Runs `controller` for `rounds` test rounds of `len` slots. `inspect`
/// sees every executed decision with its outcome.
///
/// Fails with [`HarnessError::BudgetParity`] if a slot spends a different
/// number of evaluations than the controller promises.
pub fn evaluate_controller(
    sys: &SystemConfig,
    controller: &Controller<'_>,
    label: &RunLabel,
    rounds: usize,
    len: usize,
    mut inspect: impl FnMut(&Decision, &SlotOutcome),
) -> Result<EvalRun, HarnessError> {
    let method = controller.method();
    let space = SearchSpace::from_system(sys);
    let expected = controller.evaluations_per_slot();
    let mut run = EvalRun::default();
    for round in 0..rounds {
        let mut env = Environment::new(sys.clone(), eval_seed(label.seed, round))?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            label.seed,
            STREAM_METHOD + 1000 * method as u64 + round as u64,
        ));
        let mut total = 0.0;
        for t in 0..len {
            let before = env.evaluations();
            let (decision, outcome) = controller.decide(&mut env, &space, &mut rng)?;
            let spent = env.evaluations() - before;
            if spent != expected {
                return Err(HarnessError::BudgetParity {
                    method: method.name().to_string(),
                    expected,
                    spent,
                });
            }
            inspect(&decision, &outcome);
            total += outcome.mean_total_delay();
            run.records.push(MetricsRecord {
                run_id: label.run_id.clone(),
                seed: label.seed,
                sweep_value: label.sweep_value,
                method: method.name().to_string(),
                slot: round * len + t,
                mean_total_delay: outcome.mean_total_delay(),
                mean_v2i_delay: outcome.mean_v2i_delay(),
                mean_v2v_delay: outcome.mean_v2v_delay(),
                violations: outcome.violations(),
                reward: outcome.reward(),
            });
            env.commit(&decision);
        }
        run.episodes.push(EpisodeDelay {
            run_id: label.run_id.clone(),
            seed: label.seed,
            sweep_value: label.sweep_value,
            method: method.name().to_string(),
            episode: round,
            mean_total_delay: total / len.max(1) as f64,
        });
    }
    Ok(run)
}

/// Trains an agent on `sys` with the configured hyperparameters.
pub fn train_for(cfg: &ExperimentConfig, sys: &SystemConfig, seed: u64) -> Result<(Agent, Vec<RewardPoint>), HarnessError> {
    let mut agent = Agent::new(sys, &cfg.agent, seed);
    let log = train_agent(&mut agent, sys, seed, |_, _| {})?;
    let curve = log
        .episode_rewards
        .iter()
        .enumerate()
        .map(|(episode, &mean_reward)| RewardPoint { episode, mean_reward })
        .collect();
    Ok((agent, curve))
}

/// Everything one experiment produced, in deterministic order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutcome {
    pub metrics: BTreeMap<Method, Vec<MetricsRecord>>,
    pub episodes: Vec<EpisodeDelay>,
    pub failures: Vec<CellFailure>,
    /// Reward curves of agents trained during the run, keyed by run id.
    pub curves: Vec<(String, Vec<RewardPoint>)>,
}

struct CellResult {
    runs: Vec<(Method, Result<EvalRun, String>)>,
    curve: Option<(String, Vec<RewardPoint>)>,
}

fn run_cell(
    cfg: &ExperimentConfig,
    value: Option<f64>,
    seed: u64,
    checkpoint: Option<&Agent>,
) -> CellResult {
    let label = RunLabel::new(cfg.experiment.sweep, value, seed);
    let cell_cfg = cfg.with_sweep_value(value);
    let methods = &cfg.experiment.methods;
    let fail_all = |e: String| CellResult {
        runs: methods.iter().map(|&m| (m, Err(e.clone()))).collect(),
        curve: None,
    };
    let sys = match cell_cfg.system() {
        Ok(s) => s,
        Err(e) => return fail_all(e.to_string()),
    };

    // a comparison run gives every method the same per-slot budget
    let comparison = methods.iter().any(|m| m.is_search());
    let budget = cfg.baseline.budget;
    let mut curve = None;
    let mut agent: Option<Result<Agent, String>> = None;
    if methods.contains(&Method::Ppo) {
        agent = Some(match checkpoint {
            Some(a) => a.check_system(&sys).map(|_| a.clone()).map_err(|e| e.to_string()),
            None => train_for(&cell_cfg, &sys, seed)
                .map(|(a, c)| {
                    curve = Some((label.run_id.clone(), c));
                    a
                })
                .map_err(|e| e.to_string()),
        });
    }

    let runs = methods
        .iter()
        .map(|&method| {
            let controller = match method {
                Method::Ppo => match agent.as_ref().expect("agent prepared for ppo") {
                    Ok(a) => Controller::Ppo {
                        agent: a,
                        budget: if comparison { budget } else { 1 },
                    },
                    Err(e) => return (method, Err(e.clone())),
                },
                Method::Ga => Controller::Ga {
                    params: cfg.baseline.ga.clone(),
                    budget,
                },
                Method::Qpso => Controller::Qpso {
                    params: cfg.baseline.qpso.clone(),
                    budget,
                },
                Method::Cophase => Controller::Cophase,
            };
            let run = evaluate_controller(&sys, &controller, &label, cfg.agent.eval_rounds, cfg.agent.eval_len, |_, _| {});
            (method, run.map_err(|e| e.to_string()))
        })
        .collect();
    CellResult { runs, curve }
}

/// Runs every (sweep value, seed) cell for every configured method. Cells
/// run concurrently; a failing cell is recorded and the others proceed.
pub fn run_experiment(cfg: &ExperimentConfig, checkpoint: Option<&Agent>) -> Result<ExperimentOutcome, HarnessError> {
    cfg.validate()?;
    let values: Vec<Option<f64>> = match cfg.experiment.sweep {
        SweepAxis::None => vec![None],
        _ => cfg.experiment.values.iter().copied().map(Some).collect(),
    };
    let cells: Vec<(Option<f64>, u64)> = values
        .iter()
        .flat_map(|&v| cfg.experiment.seeds.iter().map(move |&s| (v, s)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if cfg.experiment.workers > 0 {
        builder = builder.num_threads(cfg.experiment.workers);
    }
    let pool = builder.build().map_err(|e| HarnessError::Invalid {
        field: "experiment.workers".into(),
        message: e.to_string(),
    })?;
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(v, s)| run_cell(cfg, v, s, checkpoint))
            .collect()
    });

    let mut out = ExperimentOutcome::default();
    for &m in &cfg.experiment.methods {
        out.metrics.insert(m, Vec::new());
    }
    for (&(value, seed), cell) in cells.iter().zip(results) {
        let label = RunLabel::new(cfg.experiment.sweep, value, seed);
        out.curves.extend(cell.curve);
        for (method, run) in cell.runs {
            match run {
                Ok(run) => {
                    out.metrics.get_mut(&method).expect("method registered").extend(run.records);
                    out.episodes.extend(run.episodes);
                }
                Err(error) => out.failures.push(CellFailure {
                    run_id: label.run_id.clone(),
                    seed,
                    sweep_value: value,
                    method: method.name().to_string(),
                    error,
                }),
            }
        }
    }
    Ok(out)
}

/// Writes one metrics CSV per method, the per-round delays, failures,
/// reward curves of agents trained along the way, and the manifest.
pub fn write_experiment(dir: &Path, outcome: &ExperimentOutcome, mut manifest: Manifest) -> Result<(), HarnessError> {
    for (method, records) in &outcome.metrics {
        let name = metrics_file(*method);
        write_csv(&dir.join(&name), METRICS_SCHEMA, &METRICS_HEADER, records)?;
        manifest.files.push(name);
    }
    write_csv(&dir.join(EPISODE_DELAYS_FILE), EPISODE_DELAYS_SCHEMA, &EPISODE_DELAYS_HEADER, &outcome.episodes)?;
    manifest.files.push(EPISODE_DELAYS_FILE.into());
    write_csv(&dir.join(FAILURES_FILE), FAILURES_SCHEMA, &FAILURES_HEADER, &outcome.failures)?;
    manifest.files.push(FAILURES_FILE.into());
    for (run_id, curve) in &outcome.curves {
        let name = format!("curves/reward_curve_{run_id}.csv");
        write_csv(&dir.join(&name), REWARD_CURVE_SCHEMA, &REWARD_CURVE_HEADER, curve)?;
        manifest.files.push(name);
    }
    manifest.write(dir)
}

/// Output of [`train_command`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: PathBuf,
    pub reward_curve: PathBuf,
    pub agent: Agent,
}

/// Trains on the first configured seed and writes the checkpoint, the
/// reward curve and the manifest into `dir`.
pub fn train_command(cfg: &ExperimentConfig, dir: &Path) -> Result<TrainOutput, HarnessError> {
    cfg.validate()?;
    let sys = cfg.system()?;
    let seed = cfg.experiment.seeds[0];
    let (agent, curve) = train_for(cfg, &sys, seed)?;
    let checkpoint = dir.join(CHECKPOINT_FILE);
    let reward_curve = dir.join(REWARD_CURVE_FILE);
    super::ensure_dir(dir)?;
    Checkpoint::new(agent.clone(), cfg.hash()).save(&checkpoint)?;
    write_csv(&reward_curve, REWARD_CURVE_SCHEMA, &REWARD_CURVE_HEADER, &curve)?;
    let mut manifest = Manifest::new("train", cfg);
    manifest.seeds = vec![seed];
    manifest.normalizer = Some(agent.normalizer.clone());
    manifest.files = vec![CHECKPOINT_FILE.into(), REWARD_CURVE_FILE.into()];
    manifest.write(dir)?;
    Ok(TrainOutput {
        checkpoint,
        reward_curve,
        agent,
    })
}

/// Runs the experiment and writes its outputs into `dir`. Returns the
/// outcome so callers can report failures.
pub fn experiment_command(
    command: &str,
    cfg: &ExperimentConfig,
    checkpoint: Option<&Checkpoint>,
    dir: &Path,
) -> Result<ExperimentOutcome, HarnessError> {
    let outcome = run_experiment(cfg, checkpoint.map(|c| &c.agent))?;
    super::ensure_dir(dir)?;
    let mut manifest = Manifest::new(command, cfg);
    if let Some(c) = checkpoint {
        manifest.normalizer = Some(c.agent.normalizer.clone());
    }
    write_experiment(dir, &outcome, manifest)?;
    Ok(outcome)
}
