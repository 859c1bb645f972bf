//! Output files: CSV tables, JSON documents and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use offload_core::experiment::Axis;
use offload_core::{AnalysisOptions, StrategyKind};
use serde::Serialize;

use crate::error::CliError;

/// Version of every CSV schema written by this tool.
pub const CSV_SCHEMA: u32 = 1;

/// Decimal with 9 significant digits and no trailing noise.
pub fn num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Delay abscissa for every CCDF file: 1 ms to 100 s, 40 points per decade.
pub fn ccdf_grid() -> Vec<f64> {
    (0..=200).map(|k| 10f64.powf(-3.0 + k as f64 / 40.0)).collect()
}

/// Creates the output directory and hands out file paths inside it.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.path(name);
        let io = |e: csv::Error| CliError::io(&path, e.into());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(io)?;
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

/// Where the scenario came from.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    File(PathBuf),
    Generate { devices: usize, servers: usize, seed: u64 },
}

/// Everything needed to rerun a command and get identical files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub csv_schema: u32,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub scenario: ScenarioSource,
    /// Copy of the scenario actually used, after overrides.
    pub scenario_file: &'static str,
    pub strategies: Vec<StrategyKind>,
    pub alpha: f64,
    pub beta: f64,
    pub cvar_samples: usize,
    pub options: AnalysisOptions,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Axis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}
