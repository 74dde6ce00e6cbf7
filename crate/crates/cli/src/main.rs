use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use risvec_core::harness::{self, experiment_command, plot_data_command, train_command};
use risvec_core::{load_config, Checkpoint, ExperimentConfig, HarnessError, Method};

/// Semantic-aware RIS-assisted vehicular edge computing simulator.
#[derive(Debug, Parser)]
#[command(name = "risvec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a PPO agent; writes a checkpoint and the reward curve.
    Train(Common),
    /// Evaluate a trained checkpoint over the configured test rounds.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
    },
    /// Evaluate the search baselines only.
    Baseline {
        #[command(flatten)]
        common: Common,
        /// Method to run; repeat for several (default: ga and qpso).
        #[arg(long, value_name = "METHOD", value_parser = parse_method)]
        method: Vec<Method>,
    },
    /// Run every configured method over the sweep axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Use this agent for the ppo cells instead of training one per cell.
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,
    },
    /// Aggregate a run directory into plotting tables.
    PlotData {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Defaults to the input directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Replaces the configured seed list.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Replaces the configured output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("unknown method `{s}` (expected one of {})", names.join(", "))
    })
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
        let mut cfg = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.experiment.seeds = vec![seed];
        }
        if let Some(out) = &self.out {
            cfg.experiment.out_dir = out.clone();
        }
        cfg.validate()?;
        let dir = cfg.experiment.out_dir.clone();
        Ok((cfg, dir))
    }
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    Checkpoint::load(path).map_err(|e| HarnessError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

enum Failure {
    Runtime(HarnessError),
    Cells(usize),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::Runtime(e)
    }
}

fn experiment(
    name: &str,
    cfg: &ExperimentConfig,
    checkpoint: Option<&Checkpoint>,
    dir: &Path,
) -> Result<(), Failure> {
    let outcome = experiment_command(name, cfg, checkpoint, dir)?;
    for (method, records) in &outcome.metrics {
        let mean = records.iter().map(|r| r.mean_total_delay).sum::<f64>() / records.len().max(1) as f64;
        println!(
            "{:<8} {:>6} slots  mean total delay {:.6} s  -> {}",
            method.name(),
            records.len(),
            mean,
            dir.join(harness::run::metrics_file(*method)).display()
        );
    }
    for f in &outcome.failures {
        eprintln!("cell {} {} failed: {}", f.run_id, f.method, f.error);
    }
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Cells(outcome.failures.len()))
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train(common) => {
            let (cfg, dir) = common.load()?;
            let out = train_command(&cfg, &dir)?;
            println!("checkpoint   {}", out.checkpoint.display());
            println!("reward curve {}", out.reward_curve.display());
            Ok(())
        }
        Command::Eval { common, checkpoint } => {
            let (mut cfg, dir) = common.load()?;
            let ckpt = load_checkpoint(&checkpoint)?;
            cfg.experiment.methods = vec![Method::Ppo];
            experiment("eval", &cfg, Some(&ckpt), &dir)
        }
        Command::Baseline { common, method } => {
            let (mut cfg, dir) = common.load()?;
            cfg.experiment.methods = if method.is_empty() {
                vec![Method::Ga, Method::Qpso]
            } else {
                method
            };
            cfg.experiment.methods.dedup();
            cfg.validate()?;
            experiment("baseline", &cfg, None, &dir)
        }
        Command::Sweep { common, checkpoint } => {
            let (cfg, dir) = common.load()?;
            let ckpt = checkpoint
                .map(|p| load_checkpoint(&p))
                .transpose()?;
            experiment("sweep", &cfg, ckpt.as_ref(), &dir)
        }
        Command::PlotData { input, out } => {
            let out = out.unwrap_or_else(|| input.clone());
            let data = plot_data_command(&input, &out)?;
            println!(
                "{} line rows, {} link rows, {} boxplot rows -> {}",
                data.line_sweep.len(),
                data.link_delays.len(),
                data.boxplot.len(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            // help and version go to stdout, usage errors to stderr
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Cells(n)) => {
            eprintln!("error: {n} cell(s) failed; see failures.csv");
            ExitCode::from(2)
        }
    }
}
