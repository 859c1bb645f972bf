//! Problem instances: devices, servers, the device×server channel matrix and
//! risk parameters. Loading, validation, serialization and the random
//! generator for the reference experimental setup.

use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{FadingModel, DEFAULT_SAMPLES};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: usize,
    /// Poisson task arrival rate λ, tasks/second.
    pub arrival_rate: f64,
    /// Task payload d, bits.
    pub data_size: f64,
    /// Computation intensity ω, cycles/bit.
    pub compute_intensity: f64,
    /// Transmit power p, watts.
    pub tx_power: f64,
}

impl DeviceSpec {
    /// CPU cycles per task, `ω·d`.
    pub fn task_cycles(&self) -> f64 {
        self.compute_intensity * self.data_size
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub id: usize,
    pub cores: usize,
    /// Total CPU frequency F, cycles/second.
    pub total_frequency: f64,
}

/// One (device, server) link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelSpec {
    pub fading: FadingModel,
    /// Linear power ratio Φ.
    pub path_loss: f64,
    /// Bandwidth B, Hz.
    pub bandwidth: f64,
    /// Receiver noise power N0, watts.
    pub noise_power: f64,
}

/// On-disk form of a link: path loss may be given linear or in dB.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelEntry {
    fading: FadingModel,
    #[serde(default)]
    path_loss: Option<f64>,
    #[serde(default)]
    path_loss_db: Option<f64>,
    bandwidth: f64,
    noise_power: f64,
}

impl<'de> Deserialize<'de> for ChannelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let e = ChannelEntry::deserialize(de)?;
        let path_loss = match (e.path_loss, e.path_loss_db) {
            (Some(lin), None) => lin,
            (None, Some(db)) => db_to_linear(db),
            (Some(_), Some(_)) => {
                return Err(D::Error::custom("give only one of `path_loss` and `path_loss_db`"))
            }
            (None, None) => return Err(D::Error::missing_field("path_loss")),
        };
        Ok(ChannelSpec {
            fading: e.fading,
            path_loss,
            bandwidth: e.bandwidth,
            noise_power: e.noise_power,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Confidence level α in (0,1).
    pub alpha: f64,
    /// Weight β of the CVaR term in the mean-risk objective.
    pub beta: f64,
    /// Monte Carlo sample count K for channel statistics.
    pub cvar_samples: usize,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            alpha: 0.99,
            beta: 2.0,
            cvar_samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub devices: Vec<DeviceSpec>,
    pub servers: Vec<ServerSpec>,
    /// `channels[i][j]` is the link from device `i` to server `j`.
    pub channels: Vec<Vec<ChannelSpec>>,
    pub risk: RiskParams,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    schema: u32,
    #[serde(flatten)]
    scenario: Scenario,
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Where in the scenario, e.g. `devices[3].arrival_rate`.
    pub at: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("generator precondition violated: {0}")]
    Precondition(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl Scenario {
    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn num_servers(&self) -> usize {
        self.servers.len()
    }

    pub fn channel(&self, device: usize, server: usize) -> &ChannelSpec {
        &self.channels[device][server]
    }

    /// Checks every invariant and returns all violations.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut v = Vec::new();
        let mut push = |at: String, message: String| v.push(Violation { at, message });

        if self.devices.is_empty() {
            push("devices".into(), "at least one device required".into());
        }
        if self.servers.is_empty() {
            push("servers".into(), "at least one server required".into());
        }
        for (i, d) in self.devices.iter().enumerate() {
            for (name, x) in [
                ("arrival_rate", d.arrival_rate),
                ("data_size", d.data_size),
                ("compute_intensity", d.compute_intensity),
                ("tx_power", d.tx_power),
            ] {
                if !positive(x) {
                    push(format!("devices[{i}].{name}"), format!("must be positive, got {x}"));
                }
            }
        }
        for (j, s) in self.servers.iter().enumerate() {
            if s.cores < 1 {
                push(format!("servers[{j}].cores"), "must be at least 1".into());
            }
            if !positive(s.total_frequency) {
                push(
                    format!("servers[{j}].total_frequency"),
                    format!("must be positive, got {}", s.total_frequency),
                );
            }
        }
        let cores: usize = self.servers.iter().map(|s| s.cores).sum();
        if cores < self.devices.len() {
            push(
                "servers".into(),
                format!("insufficient cores: {cores} cores for {} devices", self.devices.len()),
            );
        }
        let (m, n) = (self.devices.len(), self.servers.len());
        if self.channels.len() != m || self.channels.iter().any(|row| row.len() != n) {
            let shape: Vec<usize> = self.channels.iter().map(|r| r.len()).collect();
            push(
                "channels".into(),
                format!("channel matrix shape must be {m}x{n}, got row lengths {shape:?}"),
            );
        }
        for (i, row) in self.channels.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                for msg in c.fading.violations() {
                    push(format!("channels[{i}][{j}].fading"), msg);
                }
                for (name, x) in [
                    ("path_loss", c.path_loss),
                    ("bandwidth", c.bandwidth),
                    ("noise_power", c.noise_power),
                ] {
                    if !positive(x) {
                        push(format!("channels[{i}][{j}].{name}"), format!("must be positive, got {x}"));
                    }
                }
            }
        }
        let r = &self.risk;
        if !(r.alpha > 0.0 && r.alpha < 1.0) {
            push("risk.alpha".into(), format!("confidence out of range (0,1): {}", r.alpha));
        }
        if !(r.beta >= 0.0 && r.beta.is_finite()) {
            push("risk.beta".into(), format!("risk weight must be nonnegative, got {}", r.beta));
        }
        if r.cvar_samples < 100 {
            push("risk.cvar_samples".into(), format!("need at least 100 samples, got {}", r.cvar_samples));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    /// Pretty JSON in the on-disk schema (path loss written linear).
    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            schema: SCHEMA_VERSION,
            scenario: self.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }

    /// Parses and validates a scenario from JSON text.
    pub fn from_json(text: &str) -> Result<Scenario, ScenarioError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        if file.schema != SCHEMA_VERSION {
            return Err(ScenarioError::Parse(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                file.schema
            )));
        }
        file.scenario.validate().map_err(ScenarioError::Invalid)?;
        Ok(file.scenario)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Sets every server's total frequency to `hz`.
    pub fn with_server_frequency(mut self, hz: f64) -> Scenario {
        for s in &mut self.servers {
            s.total_frequency = hz;
        }
        self
    }

    /// Sets every device's task size to `bits`.
    pub fn with_task_size(mut self, bits: f64) -> Scenario {
        for d in &mut self.devices {
            d.data_size = bits;
        }
        self
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_json(&text)
}

/// Constants of the reference experimental setup.
pub mod reference {
    /// 0.5 Mbit.
    pub const DATA_SIZE_BITS: f64 = 5e5;
    pub const COMPUTE_INTENSITY: f64 = 15.0;
    /// 30 dBm.
    pub const TX_POWER_W: f64 = 1.0;
    pub const BANDWIDTH_HZ: f64 = 1e7;
    pub const NOISE_POWER_W: f64 = 1e-9;
    pub const PATH_LOSS_DB: f64 = 70.0;
    pub const CORES: usize = 4;
    /// 10 GHz.
    pub const SERVER_FREQUENCY_HZ: f64 = 1e10;
    pub const ARRIVAL_RANGE: (f64, f64) = (10.0, 30.0);
    pub const RAYLEIGH_RANGE: (f64, f64) = (0.5, 1.0);
    pub const LOGNORMAL_LOCATION_RANGE: (f64, f64) = (1.0, 2.0);
    pub const LOGNORMAL_VARIANCE_RANGE: (f64, f64) = (0.0, 4.0);
}

fn open_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    loop {
        let x = rng.random_range(lo..hi);
        if x > lo {
            return x;
        }
    }
}

/// Random instance with the reference parameters: `m` devices, `n` servers.
///
/// Requires `1 <= m <= 4n` so the four-core servers can host every device.
pub fn generate_scenario(seed: u64, m: usize, n: usize) -> Result<Scenario, ScenarioError> {
    use reference::*;
    if m == 0 || n == 0 {
        return Err(ScenarioError::Precondition(format!("need M >= 1 and N >= 1, got M={m}, N={n}")));
    }
    if m > CORES * n {
        return Err(ScenarioError::Precondition(format!(
            "M={m} devices exceed the {} cores of {n} servers",
            CORES * n
        )));
    }
    let mut rng = seed::stream(seed, &[seed::tag::SCENARIO]);
    let devices = (0..m)
        .map(|id| DeviceSpec {
            id,
            arrival_rate: open_uniform(&mut rng, ARRIVAL_RANGE),
            data_size: DATA_SIZE_BITS,
            compute_intensity: COMPUTE_INTENSITY,
            tx_power: TX_POWER_W,
        })
        .collect();
    let servers = (0..n)
        .map(|id| ServerSpec {
            id,
            cores: CORES,
            total_frequency: SERVER_FREQUENCY_HZ,
        })
        .collect();
    let path_loss = db_to_linear(PATH_LOSS_DB);
    let channels = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let rayleigh_scale = open_uniform(&mut rng, RAYLEIGH_RANGE);
                    let location = open_uniform(&mut rng, LOGNORMAL_LOCATION_RANGE);
                    let variance = open_uniform(&mut rng, LOGNORMAL_VARIANCE_RANGE);
                    ChannelSpec {
                        fading: FadingModel::product(rayleigh_scale, location, variance.sqrt()),
                        path_loss,
                        bandwidth: BANDWIDTH_HZ,
                        noise_power: NOISE_POWER_W,
                    }
                })
                .collect()
        })
        .collect();
    let s = Scenario {
        devices,
        servers,
        channels,
        risk: RiskParams::default(),
        seed,
    };
    debug_assert!(s.validate().is_ok());
    Ok(s)
}
