//! Offloading and frequency planning.
//!
//! The objective is `min_{X,f} max_i E[t_i]* + β·CVaR_α(t_i)*`. The heuristic
//! solves it in two stages: a bottleneck assignment on the
//! frequency-independent part of each device's cost ([`bgap`]), then an exact
//! min-max frequency split per server ([`frequency`]). [`optimal`] enumerates
//! every feasible assignment instead of stage 1.

pub mod bgap;
pub mod frequency;
pub mod optimal;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;
use crate::queueing::{analyze_scenario, AnalysisOptions, DelayBound, QueueError, ScenarioAnalytics};
use crate::risk::exponential_cvar_multiplier;
use crate::scenario::{Scenario, Violation};

pub use bgap::{solve_bottleneck_assignment, BottleneckSolution};
pub use frequency::{allocate_server, DeviceCost, ServerAllocation, ServerTerm};
pub use optimal::{solve_optimal, OptimalSearch, DEFAULT_GUARD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("device {device} has no stable link to any server")]
    NoFeasibleLink { device: usize },
    #[error("insufficient cores: {cores} cores for {devices} devices")]
    InsufficientCores { cores: usize, devices: usize },
    #[error("no assignment respects both link feasibility and core counts")]
    NoAssignment,
    #[error("server {server} overloaded: stability floors need {required:.4e} Hz but only {capacity:.4e} Hz available")]
    ServerOverload { server: usize, required: f64, capacity: f64 },
    #[error("exhaustive search over {count} assignments exceeds the guard of {guard}")]
    GuardExceeded { count: f64, guard: u64 },
    #[error("link ({device}, {server}) is unusable: {source}")]
    Link { device: usize, server: usize, source: QueueError },
    #[error("plan does not match scenario: {0}")]
    Shape(String),
    #[error("invalid scenario: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Scenario(Vec<Violation>),
}

/// Which parts of the mean-risk objective a solver optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub beta: f64,
    /// Include device and server queueing waits.
    pub queueing: bool,
}

impl ObjectiveTerms {
    pub fn full(beta: f64) -> Self {
        ObjectiveTerms { beta, queueing: true }
    }

    /// Value of a bound under these terms.
    pub fn evaluate(&self, b: &DelayBound) -> f64 {
        let (mut mean, mut cvar) = (b.mean.tx + b.mean.compute, b.cvar.tx + b.cvar.compute);
        if self.queueing {
            mean += b.mean.device_wait + b.mean.server_wait;
            cvar += b.cvar.device_wait + b.cvar.server_wait;
        }
        mean + self.beta * cvar
    }
}

/// Frequency-independent stage-1 costs; `None` marks an unusable link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignCost {
    entries: Vec<Vec<Option<f64>>>,
}

impl AssignCost {
    pub fn from_rows(entries: Vec<Vec<Option<f64>>>) -> Self {
        AssignCost { entries }
    }

    pub fn get(&self, device: usize, server: usize) -> Option<f64> {
        self.entries[device][server]
    }

    pub fn num_devices(&self) -> usize {
        self.entries.len()
    }

    pub fn num_servers(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.entries
    }

    pub fn scaled(&self, k: f64) -> AssignCost {
        AssignCost {
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|e| e.map(|a| a * k)).collect())
                .collect(),
        }
    }
}

/// `A[i][j] = device-wait mean + 1/μ + β·(device-wait CVaR + U)`; the wait
/// terms are dropped when `terms.queueing` is false.
pub fn assign_costs(analytics: &ScenarioAnalytics, terms: ObjectiveTerms) -> Result<AssignCost, PlanError> {
    let mult = exponential_cvar_multiplier(analytics.alpha);
    let entries: Vec<Vec<Option<f64>>> = analytics
        .links
        .iter()
        .map(|row| {
            row.iter()
                .map(|link| {
                    link.as_ref().ok().map(|a| {
                        let mut cost = a.tx_mean() + terms.beta * a.cvar_tx;
                        if terms.queueing {
                            cost += a.device_wait_mean(analytics.options)
                                + terms.beta * a.arrival_rate * a.tx_variance / (2.0 * (1.0 - a.rho)) * mult;
                        }
                        cost
                    })
                })
                .collect()
        })
        .collect();
    if let Some(device) = entries.iter().position(|r| r.iter().all(Option::is_none)) {
        return Err(PlanError::NoFeasibleLink { device });
    }
    Ok(AssignCost { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "Q-R")]
    QR,
    #[serde(rename = "Q-NR")]
    QNR,
    #[serde(rename = "NQ-R")]
    NQR,
    #[serde(rename = "NQ-NR")]
    NQNR,
    #[serde(rename = "Q-R-Opt")]
    QROpt,
    #[serde(rename = "Q-NR-Opt")]
    QNROpt,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::QR,
        StrategyKind::QROpt,
        StrategyKind::QNR,
        StrategyKind::QNROpt,
        StrategyKind::NQR,
        StrategyKind::NQNR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::QR => "Q-R",
            StrategyKind::QNR => "Q-NR",
            StrategyKind::NQR => "NQ-R",
            StrategyKind::NQNR => "NQ-NR",
            StrategyKind::QROpt => "Q-R-Opt",
            StrategyKind::QNROpt => "Q-NR-Opt",
        }
    }

    pub fn risk_sensitive(self) -> bool {
        matches!(self, StrategyKind::QR | StrategyKind::NQR | StrategyKind::QROpt)
    }

    pub fn queueing(self) -> bool {
        !matches!(self, StrategyKind::NQR | StrategyKind::NQNR)
    }

    pub fn exhaustive(self) -> bool {
        matches!(self, StrategyKind::QROpt | StrategyKind::QNROpt)
    }

    /// Terms this strategy optimizes, given the scenario's β.
    pub fn terms(self, beta: f64) -> ObjectiveTerms {
        ObjectiveTerms {
            beta: if self.risk_sensitive() { beta } else { 0.0 },
            queueing: self.queueing(),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!(
                    "unknown strategy `{s}` (expected one of {})",
                    StrategyKind::ALL.map(|k| k.name()).join(", ")
                )
            })
    }
}

/// One row of the offloading matrix: device → server at a frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Offload {
    pub device: usize,
    pub server: usize,
    pub frequency_hz: f64,
}

/// Per-device outcome of a plan under the full objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub device: usize,
    pub server: usize,
    /// `None` when the chosen server queue is unstable at this frequency.
    pub bound: Option<DelayBound>,
    /// `E[t]* + β·CVaR*`, infinite when unstable.
    pub mean_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub strategy: StrategyKind,
    /// Scenario β used for the reported objective.
    pub beta: f64,
    pub alpha: f64,
    /// Max mean-risk sum over devices under the full objective.
    pub objective: f64,
    /// Max value of the terms the strategy itself optimized.
    pub optimized_objective: f64,
    pub offloads: Vec<Offload>,
    pub per_device: Vec<DeviceReport>,
}

impl Plan {
    pub fn assignment(&self) -> Vec<usize> {
        self.offloads.iter().map(|o| o.server).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.offloads.iter().map(|o| o.frequency_hz).collect()
    }

    /// Binary `M×N` offloading matrix.
    pub fn offloading_matrix(&self, servers: usize) -> Vec<Vec<u8>> {
        self.offloads
            .iter()
            .map(|o| (0..servers).map(|j| u8::from(j == o.server)).collect())
            .collect()
    }

    /// `M×N` frequency matrix, zero off the chosen links.
    pub fn frequency_matrix(&self, servers: usize) -> Vec<Vec<f64>> {
        self.offloads
            .iter()
            .map(|o| (0..servers).map(|j| if j == o.server { o.frequency_hz } else { 0.0 }).collect())
            .collect()
    }

    /// Machine check of one-server-per-device, core counts, frequency budgets
    /// and stability floors. Capacity is checked to 1e-6 relative.
    pub fn violations(&self, s: &Scenario) -> Vec<String> {
        let mut out = Vec::new();
        let m = s.num_devices();
        let n = s.num_servers();
        if self.offloads.len() != m {
            out.push(format!("{} offloads for {m} devices", self.offloads.len()));
        }
        for (i, o) in self.offloads.iter().enumerate() {
            if o.device != i {
                out.push(format!("offload {i} names device {}", o.device));
            }
            if o.server >= n {
                out.push(format!("device {i} offloads to missing server {}", o.server));
            }
            if !(o.frequency_hz > 0.0) {
                out.push(format!("device {i} has non-positive frequency {}", o.frequency_hz));
            }
            if let Some(d) = s.devices.get(i) {
                let floor = d.arrival_rate * d.task_cycles();
                if o.frequency_hz < floor * (1.0 - 1e-9) {
                    out.push(format!(
                        "device {i} frequency {:.6e} below stability floor {floor:.6e}",
                        o.frequency_hz
                    ));
                }
            }
        }
        for (j, srv) in s.servers.iter().enumerate() {
            let hosted: Vec<&Offload> = self.offloads.iter().filter(|o| o.server == j).collect();
            if hosted.len() > srv.cores {
                out.push(format!("server {j} hosts {} devices on {} cores", hosted.len(), srv.cores));
            }
            let used: f64 = hosted.iter().map(|o| o.frequency_hz).sum();
            if used > srv.total_frequency * (1.0 + 1e-6) {
                out.push(format!(
                    "server {j} allocates {used:.6e} Hz of {:.6e}",
                    srv.total_frequency
                ));
            }
        }
        out
    }
}

/// Frequencies per device and the max value of `terms` over devices.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyAllocation {
    pub frequencies: Vec<f64>,
    pub objective: f64,
}

/// Stage 2 for a fixed assignment: exact min-max split on every server.
pub fn allocate_frequencies(
    assignment: &[usize],
    scenario: &Scenario,
    analytics: &ScenarioAnalytics,
    terms: ObjectiveTerms,
) -> Result<FrequencyAllocation, PlanError> {
    let m = scenario.num_devices();
    if assignment.len() != m {
        return Err(PlanError::Shape(format!("assignment has {} entries for {m} devices", assignment.len())));
    }
    let mut frequencies = vec![0.0; m];
    let mut objective = f64::NEG_INFINITY;
    for (j, server) in scenario.servers.iter().enumerate() {
        let hosted: Vec<usize> = (0..m).filter(|&i| assignment[i] == j).collect();
        let costs = hosted
            .iter()
            .map(|&i| {
                analytics
                    .link(i, j)
                    .map(|a| DeviceCost::from_link(a, analytics.alpha, analytics.options, terms))
                    .map_err(|e| PlanError::Link {
                        device: i,
                        server: j,
                        source: e.clone(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let alloc = allocate_server(&costs, server.total_frequency, j)?;
        for (&i, &f) in hosted.iter().zip(&alloc.frequencies) {
            frequencies[i] = f;
        }
        objective = objective.max(alloc.objective);
    }
    Ok(FrequencyAllocation { frequencies, objective })
}

/// Scenario plus its per-link analytics; the entry point for solving.
#[derive(Debug, Clone)]
pub struct Planner {
    pub scenario: Scenario,
    pub analytics: ScenarioAnalytics,
    pub execution: Execution,
}

impl Planner {
    pub fn new(scenario: Scenario, options: AnalysisOptions, execution: Execution) -> Result<Self, PlanError> {
        scenario.validate().map_err(PlanError::Scenario)?;
        let analytics = analyze_scenario(&scenario, options, execution);
        Ok(Planner {
            scenario,
            analytics,
            execution,
        })
    }

    pub fn capacities(&self) -> Vec<usize> {
        self.scenario.servers.iter().map(|s| s.cores).collect()
    }

    /// Builds a plan from an assignment and frequencies, evaluating every
    /// device under the full objective with the scenario's β.
    pub fn evaluate(
        &self,
        strategy: StrategyKind,
        assignment: &[usize],
        frequencies: &[f64],
        optimized_objective: f64,
    ) -> Result<Plan, PlanError> {
        let m = self.scenario.num_devices();
        if assignment.len() != m || frequencies.len() != m {
            return Err(PlanError::Shape(format!("plan covers {} devices, scenario has {m}", assignment.len())));
        }
        let beta = self.scenario.risk.beta;
        let full = ObjectiveTerms::full(beta);
        let mut per_device = Vec::with_capacity(m);
        for i in 0..m {
            let j = assignment[i];
            if j >= self.scenario.num_servers() {
                return Err(PlanError::Shape(format!("device {i} assigned to missing server {j}")));
            }
            let link = self.analytics.link(i, j).map_err(|e| PlanError::Link {
                device: i,
                server: j,
                source: e.clone(),
            })?;
            let bound = link.bound(frequencies[i], self.analytics.alpha, self.analytics.options).ok();
            per_device.push(DeviceReport {
                device: i,
                server: j,
                mean_risk: bound.as_ref().map_or(f64::INFINITY, |b| full.evaluate(b)),
                bound,
            });
        }
        Ok(Plan {
            strategy,
            beta,
            alpha: self.analytics.alpha,
            objective: per_device.iter().map(|d| d.mean_risk).fold(f64::NEG_INFINITY, f64::max),
            optimized_objective,
            offloads: (0..m)
                .map(|i| Offload {
                    device: i,
                    server: assignment[i],
                    frequency_hz: frequencies[i],
                })
                .collect(),
            per_device,
        })
    }

    /// Stage-1 bottleneck assignment for the given terms.
    pub fn stage_one(&self, terms: ObjectiveTerms) -> Result<BottleneckSolution, PlanError> {
        let costs = assign_costs(&self.analytics, terms)?;
        solve_bottleneck_assignment(&costs, &self.capacities())
    }

    /// Two-stage heuristic under `terms`.
    pub fn solve_heuristic(&self, strategy: StrategyKind, terms: ObjectiveTerms) -> Result<Plan, PlanError> {
        let x = self.stage_one(terms)?;
        let alloc = allocate_frequencies(&x.assignment, &self.scenario, &self.analytics, terms)?;
        self.evaluate(strategy, &x.assignment, &alloc.frequencies, alloc.objective)
    }

    pub fn solve(&self, strategy: StrategyKind) -> Result<Plan, PlanError> {
        let terms = strategy.terms(self.scenario.risk.beta);
        if strategy.exhaustive() {
            Ok(solve_optimal(self, strategy, terms, DEFAULT_GUARD)?.plan)
        } else {
            self.solve_heuristic(strategy, terms)
        }
    }
}

/// Analyzes `scenario` with default options and solves it with `strategy`.
pub fn solve(scenario: &Scenario, strategy: StrategyKind) -> Result<Plan, PlanError> {
    Planner::new(scenario.clone(), AnalysisOptions::default(), Execution::default())?.solve(strategy)
}
