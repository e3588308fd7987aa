use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use bam_core::experiment::{cmd_all, cmd_evaluate, cmd_generate, cmd_report, cmd_train, Algo, ExperimentConfig};
use bam_core::TaskId;

/// Amortized Bayesian decision making: experiment harness.
#[derive(Parser, Debug)]
#[command(name = "bam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one dataset per (task, budget, seed).
    Generate(Overrides),
    /// Train NPE and BAM models and log per-epoch curves.
    Train(Overrides),
    /// Score decisions against reference posteriors.
    Evaluate(Overrides),
    /// Build figure tables and SVGs from evaluation output.
    Report(Overrides),
    /// generate, train, evaluate and report in sequence.
    All(Overrides),
}

#[derive(Args, Debug)]
struct Overrides {
    /// TOML experiment configuration; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Tasks to run (repeat or comma-separate): toy, linear_gaussian, sir, lotka_volterra, bvep.
    #[arg(long, value_delimiter = ',')]
    task: Vec<TaskId>,
    #[arg(long)]
    algo: Option<Algo>,
    /// Simulation budgets (repeat or comma-separate).
    #[arg(long, value_delimiter = ',')]
    budget: Vec<usize>,
    /// Training seeds (repeat or comma-separate).
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Evaluation observations per task.
    #[arg(long)]
    observations: Option<usize>,
    /// Allow the 50k and 100k budgets.
    #[arg(long)]
    large_budgets: bool,
}

impl Overrides {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if !self.task.is_empty() {
            cfg.tasks = self.task.clone();
        }
        if let Some(a) = self.algo {
            cfg.algo = a;
        }
        if !self.budget.is_empty() {
            cfg.budgets = self.budget.clone();
        }
        if !self.seed.is_empty() {
            cfg.seeds = self.seed.clone();
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if self.observations.is_some() {
            cfg.observations = self.observations;
        }
        cfg.large_budgets |= self.large_budgets;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (stage, o): (fn(&ExperimentConfig) -> bam_core::Result<()>, &Overrides) = match &cli.command {
        Command::Generate(o) => (cmd_generate, o),
        Command::Train(o) => (cmd_train, o),
        Command::Evaluate(o) => (cmd_evaluate, o),
        Command::Report(o) => (cmd_report, o),
        Command::All(o) => (cmd_all, o),
    };
    let cfg = o.resolve()?;
    stage(&cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
