//! `offload`: plan, simulate, sweep and compare task-offloading strategies.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 infeasible plan,
//! 3 invalid input, 4 exhaustive-search guard exceeded.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use offload_core::experiment::Axis;
use offload_core::planner::DEFAULT_GUARD;
use offload_core::StrategyKind;

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "offload", version, about = "Risk-sensitive task offloading planner and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// `M,N,seed` for the built-in generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Generate {
    pub devices: usize,
    pub servers: usize,
    pub seed: u64,
}

fn parse_generate(s: &str) -> Result<Generate, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [m, n, seed] = parts.as_slice() else {
        return Err(format!("expected M,N,seed, got `{s}`"));
    };
    let field = |name: &str, v: &str| v.parse::<u64>().map_err(|e| format!("{name} `{v}`: {e}"));
    Ok(Generate {
        devices: field("M", m)? as usize,
        servers: field("N", n)? as usize,
        seed: field("seed", seed)?,
    })
}

/// Scenario selection, overrides and analysis switches shared by all commands.
#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    pub scenario: Option<PathBuf>,
    /// Generate a reference scenario with M devices and N servers.
    #[arg(long, value_name = "M,N,SEED", value_parser = parse_generate)]
    pub generate: Option<Generate>,
    /// Override the CVaR confidence level.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Override the CVaR weight in the objective.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Override the Monte Carlo channel draws per link.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Server utilization λc/f instead of the device-queue utilization.
    #[arg(long)]
    pub corrected_rho_s: bool,
    /// Include the service-variance term in the device mean wait.
    #[arg(long)]
    pub full_pk: bool,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Simulation window and seed ensemble.
#[derive(Args, Debug, Clone)]
pub struct SimArgs {
    /// Simulated seconds per run.
    #[arg(long, default_value_t = 300.0)]
    pub horizon: f64,
    /// Seconds discarded at the start (default: 10% of the horizon).
    #[arg(long)]
    pub warmup: Option<f64>,
    /// Number of simulation seeds, 0..seeds.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one strategy and print the plan with its delay bounds.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "Q-R")]
        strategy: StrategyKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one plan and write per-task records, per-device statistics and the CCDF.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, conflicts_with = "plan")]
        strategy: Option<StrategyKind>,
        /// Plan JSON written by `plan --out`.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value_t = 300.0)]
        horizon: f64,
        #[arg(long)]
        warmup: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep server frequency or task size and record ensemble mean and p99.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        axis: Axis,
        /// Ascending values in Hz (frequency) or bits (task_size).
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "Q-R,Q-NR")]
        strategy: Vec<StrategyKind>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan and simulate several strategies on one scenario.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_delimiter = ',', default_value = "Q-R,Q-R-Opt,Q-NR,Q-NR-Opt,NQ-R,NQ-NR")]
        strategy: Vec<StrategyKind>,
        /// Largest N^M an exhaustive strategy may enumerate.
        #[arg(long, default_value_t = DEFAULT_GUARD)]
        guard: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan { scenario, strategy, out } => commands::plan(&scenario, strategy, out.as_deref()),
        Command::Simulate {
            scenario,
            strategy,
            plan,
            horizon,
            warmup,
            seed,
            out,
        } => commands::simulate(&scenario, strategy, plan.as_deref(), horizon, warmup, seed, &out),
        Command::Sweep {
            scenario,
            sim,
            axis,
            values,
            strategy,
            out,
        } => commands::sweep(&scenario, &sim, axis, &values, &strategy, &out),
        Command::Compare {
            scenario,
            sim,
            strategy,
            guard,
            out,
        } => commands::compare(&scenario, &sim, &strategy, guard, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
