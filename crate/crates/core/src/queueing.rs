//! Analytic delay bounds for the cascaded device queue (M/G/1, transmission)
//! and per-device server core queue (G/D/1, computation).
//!
//! Departure moments of the device queue feed the server queue: by flow
//! conservation the departure rate is λ, and the inter-departure variance is
//! `(1 + ρ²(c_s² − 1))/λ²`, which is the marginal inter-departure variance of
//! a stable M/G/1 queue.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{estimate_tx_stats, ChannelError, TxTimeStats};
use crate::par::Execution;
use crate::risk::{self, Provenance, RiskError, SampleSet};
use crate::scenario::{ChannelSpec, DeviceSpec, RiskParams, Scenario};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueKind {
    Device,
    Server,
}

impl std::fmt::Display for QueueKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            QueueKind::Device => "device",
            QueueKind::Server => "server",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueueError {
    #[error("{queue} queue unstable: utilization {rho:.6} >= 1")]
    Unstable { queue: QueueKind, rho: f64 },
    #[error("invalid queue parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// Switches between the printed model and its variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// Add the service-variance term `λV/(2(1−ρ))` to the device-queue mean
    /// wait, giving the full Pollaczek–Khinchine value.
    #[serde(default)]
    pub full_pk: bool,
    /// Server-queue utilization `λˢ·c/f` instead of `λˢ/μ`.
    #[serde(default)]
    pub corrected_rho_s: bool,
}

fn unstable(queue: QueueKind, rho: f64) -> QueueError {
    QueueError::Unstable { queue, rho }
}

/// Mean device-queue wait `λ/(2μ²(1−ρ))` with `ρ = λ/μ`.
pub fn device_wait_mean(lambda: f64, mu: f64) -> Result<f64, QueueError> {
    let rho = lambda / mu;
    if rho >= 1.0 {
        return Err(unstable(QueueKind::Device, rho));
    }
    Ok(lambda / (2.0 * mu * mu * (1.0 - rho)))
}

/// G/G/1 mean-wait upper bound `λ(σa² + σb²)/(2(1−ρ))`.
pub fn kingman_bound(lambda: f64, var_arrival: f64, var_service: f64, rho: f64) -> Result<f64, QueueError> {
    if rho >= 1.0 {
        return Err(unstable(QueueKind::Device, rho));
    }
    Ok(lambda * (var_arrival + var_service) / (2.0 * (1.0 - rho)))
}

/// G/D/1 mean-wait bound at the server: Kingman with zero service variance.
pub fn server_wait_bound(dep_rate: f64, dep_interval_var: f64, rho_s: f64) -> Result<f64, QueueError> {
    kingman_bound(dep_rate, dep_interval_var, 0.0, rho_s).map_err(|_| unstable(QueueKind::Server, rho_s))
}

/// Rate and inter-departure variance of a stable M/G/1 device queue.
pub fn departure_moments(lambda: f64, tx: &TxTimeStats) -> Result<(f64, f64), QueueError> {
    let rho = lambda * tx.mean;
    if rho >= 1.0 {
        return Err(unstable(QueueKind::Device, rho));
    }
    let scv = tx.scv();
    Ok((lambda, (1.0 + rho * rho * (scv - 1.0)) / (lambda * lambda)))
}

/// Heavy-traffic waiting-time CDF `1 − exp(−2(1−ρ)w/(λv))`.
pub fn heavy_traffic_wait_cdf(w: f64, lambda: f64, v: f64, rho: f64) -> Result<f64, QueueError> {
    if rho >= 1.0 {
        return Err(unstable(QueueKind::Device, rho));
    }
    if w < 0.0 {
        return Err(QueueError::Parameter(format!("waiting time must be nonnegative, got {w}")));
    }
    if v == 0.0 {
        return Ok(if w > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(-(-2.0 * (1.0 - rho) * w / (lambda * v)).exp_m1())
}

/// The four delay parts of one task.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Components {
    pub device_wait: f64,
    pub tx: f64,
    pub server_wait: f64,
    pub compute: f64,
}

impl Components {
    pub fn total(&self) -> f64 {
        self.device_wait + self.tx + self.server_wait + self.compute
    }
}

/// Upper bounds on the mean and the α-CVaR of a device's total delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayBound {
    pub mean_bound: f64,
    pub cvar_bound: f64,
    pub mean: Components,
    pub cvar: Components,
}

impl DelayBound {
    fn from_parts(mean: Components, cvar: Components) -> Self {
        DelayBound {
            mean_bound: mean.total(),
            cvar_bound: cvar.total(),
            mean,
            cvar,
        }
    }

    /// Mean-risk sum `E[t]* + β·CVaR*`.
    pub fn mean_risk(&self, beta: f64) -> f64 {
        self.mean_bound + beta * self.cvar_bound
    }
}

/// Frequency-independent analytics of one (device, server) link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAnalytics {
    pub arrival_rate: f64,
    pub task_cycles: f64,
    /// Device-queue service rate μ = 1/E[tᴰ].
    pub mu: f64,
    /// Device-queue utilization ρ = λ/μ.
    pub rho: f64,
    /// Transmission-time variance V.
    pub tx_variance: f64,
    /// Server-queue arrival rate λˢ.
    pub dep_rate: f64,
    /// Server-queue inter-arrival variance σˢ².
    pub dep_interval_var: f64,
    /// Server-queue utilization as `λˢ/μ`.
    pub rho_s: f64,
    /// CVaR of the transmission time, U.
    pub cvar_tx: f64,
    /// Minimizing threshold γ* of the CVaR program.
    pub cvar_tx_gamma: f64,
    pub tx: TxTimeStats,
}

impl LinkAnalytics {
    pub fn tx_mean(&self) -> f64 {
        1.0 / self.mu
    }

    /// Server utilization at frequency `f` under `opts`.
    pub fn server_utilization(&self, f: f64, opts: AnalysisOptions) -> f64 {
        if opts.corrected_rho_s {
            self.dep_rate * self.task_cycles / f
        } else {
            self.rho_s
        }
    }

    /// Smallest frequency keeping the server queue stable, `λˢ·c`.
    pub fn stability_floor(&self) -> f64 {
        self.dep_rate * self.task_cycles
    }

    pub fn device_wait_mean(&self, opts: AnalysisOptions) -> f64 {
        let base = self.arrival_rate / (2.0 * self.mu * self.mu * (1.0 - self.rho));
        if opts.full_pk {
            base + self.arrival_rate * self.tx_variance / (2.0 * (1.0 - self.rho))
        } else {
            base
        }
    }

    pub fn device_wait_cvar(&self, alpha: f64) -> Result<f64, QueueError> {
        Ok(risk::cvar_exponential_wait(self.arrival_rate, self.tx_variance, self.rho, alpha)?)
    }

    pub fn server_wait_mean(&self, f: f64, opts: AnalysisOptions) -> Result<f64, QueueError> {
        server_wait_bound(self.dep_rate, self.dep_interval_var, self.server_utilization(f, opts))
    }

    pub fn server_wait_cvar(&self, f: f64, alpha: f64, opts: AnalysisOptions) -> Result<f64, QueueError> {
        let rho_s = self.server_utilization(f, opts);
        if rho_s >= 1.0 {
            return Err(unstable(QueueKind::Server, rho_s));
        }
        Ok(risk::cvar_exponential_wait(self.dep_rate, self.dep_interval_var, rho_s, alpha)?)
    }

    /// Mean and CVaR bounds when the link's server core runs at `f`.
    pub fn bound(&self, f: f64, alpha: f64, opts: AnalysisOptions) -> Result<DelayBound, QueueError> {
        if !(f > 0.0) {
            return Err(QueueError::Parameter(format!("frequency must be positive, got {f}")));
        }
        let compute = self.task_cycles / f;
        let mean = Components {
            device_wait: self.device_wait_mean(opts),
            tx: self.tx_mean(),
            server_wait: self.server_wait_mean(f, opts)?,
            compute,
        };
        let cvar = Components {
            device_wait: self.device_wait_cvar(alpha)?,
            tx: self.cvar_tx,
            server_wait: self.server_wait_cvar(f, alpha, opts)?,
            compute: risk::cvar_constant(compute),
        };
        Ok(DelayBound::from_parts(mean, cvar))
    }
}

/// Builds the frequency-independent analytics of a link from `risk.cvar_samples`
/// channel draws seeded by `seed`.
pub fn analyze_link(
    device: &DeviceSpec,
    channel: &ChannelSpec,
    risk: &RiskParams,
    seed: u64,
) -> Result<LinkAnalytics, QueueError> {
    let mut tx = estimate_tx_stats(device, channel, risk.cvar_samples, seed, true)?;
    let samples = SampleSet::new(tx.samples.take().unwrap_or_default(), Provenance::ChannelMonteCarlo)?;
    let cvar = risk::cvar_lp(&samples, risk.alpha)?;
    from_tx_stats(device, tx, cvar.value, cvar.gamma)
}

/// Analytics from already-estimated transmission statistics and tx CVaR.
pub fn from_tx_stats(
    device: &DeviceSpec,
    tx: TxTimeStats,
    cvar_tx: f64,
    cvar_tx_gamma: f64,
) -> Result<LinkAnalytics, QueueError> {
    let lambda = device.arrival_rate;
    let mu = tx.service_rate();
    let rho = lambda / mu;
    if rho >= 1.0 {
        return Err(unstable(QueueKind::Device, rho));
    }
    let (dep_rate, dep_interval_var) = departure_moments(lambda, &tx)?;
    Ok(LinkAnalytics {
        arrival_rate: lambda,
        task_cycles: device.task_cycles(),
        mu,
        rho,
        tx_variance: tx.variance,
        dep_rate,
        dep_interval_var,
        rho_s: dep_rate / mu,
        cvar_tx,
        cvar_tx_gamma,
        tx,
    })
}

/// Analytics and bounds of a link served at frequency `f`.
pub fn link_analytics(
    device: &DeviceSpec,
    channel: &ChannelSpec,
    f: f64,
    risk: &RiskParams,
    opts: AnalysisOptions,
    seed: u64,
) -> Result<(LinkAnalytics, DelayBound), QueueError> {
    let a = analyze_link(device, channel, risk, seed)?;
    let b = a.bound(f, risk.alpha, opts)?;
    Ok((a, b))
}

/// Sums the bounds of the selected links of one device. Exactly one entry of
/// `selected` must be true.
pub fn total_bounds(selected: &[bool], bounds: &[Option<DelayBound>]) -> Result<DelayBound, QueueError> {
    let chosen: Vec<usize> = (0..selected.len()).filter(|&j| selected[j]).collect();
    if chosen.len() != 1 {
        return Err(QueueError::Parameter(format!(
            "exactly one server must be selected, got {}",
            chosen.len()
        )));
    }
    bounds
        .get(chosen[0])
        .copied()
        .flatten()
        .ok_or_else(|| QueueError::Parameter(format!("no bound for server {}", chosen[0])))
}

/// Per-link analytics for a whole scenario.
#[derive(Debug, Clone)]
pub struct ScenarioAnalytics {
    /// `links[i][j]`, or the reason the link is unusable.
    pub links: Vec<Vec<Result<LinkAnalytics, QueueError>>>,
    pub alpha: f64,
    pub options: AnalysisOptions,
}

impl ScenarioAnalytics {
    pub fn link(&self, device: usize, server: usize) -> Result<&LinkAnalytics, &QueueError> {
        self.links[device][server].as_ref()
    }
}

/// Seed of the channel-statistics stream for link `(i, j)`.
pub fn link_seed(scenario_seed: u64, device: usize, server: usize) -> u64 {
    seed::derive(scenario_seed, &[seed::tag::CHANNEL_STATS, device as u64, server as u64])
}

/// Analyzes all `M×N` links, fanning out per link.
pub fn analyze_scenario(s: &Scenario, opts: AnalysisOptions, exec: Execution) -> ScenarioAnalytics {
    let (m, n) = (s.num_devices(), s.num_servers());
    let flat = exec.map_range(m * n, |k| {
        let (i, j) = (k / n, k % n);
        analyze_link(&s.devices[i], s.channel(i, j), &s.risk, link_seed(s.seed, i, j))
    });
    let mut it = flat.into_iter();
    let links = (0..m).map(|_| it.by_ref().take(n).collect()).collect();
    ScenarioAnalytics {
        links,
        alpha: s.risk.alpha,
        options: opts,
    }
}
