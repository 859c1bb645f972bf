//! CLI errors and their process exit codes.

use std::path::PathBuf;

use offload_core::experiment::ExperimentError;
use offload_core::simulator::SimError;
use offload_core::{PlanError, ScenarioError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("infeasible: {0}")]
    Infeasible(PlanError),
    #[error("{0}")]
    Guard(PlanError),
    #[error("simulation failed: {0}")]
    Simulation(SimError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            CliError::Input(_) => 3,
            CliError::Guard(_) => 4,
            CliError::Simulation(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::GuardExceeded { .. } => CliError::Guard(e),
            PlanError::Scenario(_) | PlanError::Shape(_) => CliError::Input(e.to_string()),
            _ => CliError::Infeasible(e),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Parameter(_) | SimError::Plan(_) | SimError::InsufficientSamples { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Simulation(e),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Plan(p) => p.into(),
            ExperimentError::Sim(s) => s.into(),
            ExperimentError::Sweep(m) => CliError::Input(m),
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Input(e.to_string())
    }
}
