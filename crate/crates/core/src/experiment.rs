//! Seed ensembles, parameter sweeps and strategy comparisons.
//!
//! Every job (strategy, sweep value, seed) is independent; jobs fan out
//! through [`Execution`] and results come back in job order, so output does
//! not depend on the thread count. Seeds are shared across strategies and
//! sweep values (common random numbers), which keeps paired comparisons tight.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::Execution;
use crate::planner::{solve_optimal, Plan, PlanError, Planner, StrategyKind, DEFAULT_GUARD};
use crate::queueing::{analyze_scenario, AnalysisOptions};
use crate::scenario::Scenario;
use crate::simulator::{self, ccdf_sorted, SimError, Target};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

/// Simulation settings shared by every run of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub warmup: f64,
    pub seeds: Vec<u64>,
    pub alpha: f64,
}

impl SimConfig {
    /// `count` seeds `0..count` with the default warmup.
    pub fn new(horizon: f64, count: u64, alpha: f64) -> Self {
        SimConfig {
            horizon,
            warmup: simulator::default_warmup(horizon),
            seeds: (0..count).collect(),
            alpha,
        }
    }
}

/// Empirical metrics of one simulation run, pooled over devices unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub tasks: usize,
    pub mean: f64,
    pub p99: f64,
    pub cvar: f64,
    /// Largest per-device CVaR.
    pub worst_device_cvar: f64,
    /// Largest per-device mean.
    pub worst_device_mean: f64,
    /// Pooled CCDF at the requested grid.
    pub ccdf: Vec<f64>,
    pub overflowed: bool,
}

/// Simulates `plan` once per seed and summarizes each run.
pub fn simulate_plan(
    scenario: &Scenario,
    plan: &Plan,
    cfg: &SimConfig,
    grid: &[f64],
    exec: Execution,
) -> Result<Vec<RunMetrics>, ExperimentError> {
    exec.map_slice(&cfg.seeds, |&seed| run_metrics(scenario, plan, cfg, grid, seed))
        .into_iter()
        .collect()
}

fn run_metrics(
    scenario: &Scenario,
    plan: &Plan,
    cfg: &SimConfig,
    grid: &[f64],
    seed: u64,
) -> Result<RunMetrics, ExperimentError> {
    let r = simulator::run(scenario, plan, cfg.horizon, cfg.warmup, seed)?;
    let per_device = simulator::statistics(&r, cfg.alpha)?;
    let pooled = simulator::aggregate_statistics(&r, cfg.alpha)?;
    let mut totals = r.totals(Target::Aggregate);
    totals.sort_by(f64::total_cmp);
    Ok(RunMetrics {
        seed,
        tasks: pooled.count,
        mean: pooled.mean,
        p99: pooled.p99,
        cvar: pooled.cvar_alpha,
        worst_device_cvar: per_device.iter().map(|d| d.summary.cvar_alpha).fold(0.0, f64::max),
        worst_device_mean: per_device.iter().map(|d| d.summary.mean).fold(0.0, f64::max),
        ccdf: ccdf_sorted(&totals, grid),
        overflowed: r.any_overflow(),
    })
}

/// Ensemble means over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub runs: usize,
    pub mean: f64,
    pub p99: f64,
    pub cvar: f64,
    pub worst_device_cvar: f64,
    pub worst_device_mean: f64,
    pub ccdf: Vec<f64>,
    pub overflowed: bool,
}

impl Ensemble {
    pub fn from_runs(runs: &[RunMetrics]) -> Self {
        let k = runs.len().max(1) as f64;
        let avg = |f: &dyn Fn(&RunMetrics) -> f64| runs.iter().map(f).sum::<f64>() / k;
        let width = runs.first().map_or(0, |r| r.ccdf.len());
        Ensemble {
            runs: runs.len(),
            mean: avg(&|r| r.mean),
            p99: avg(&|r| r.p99),
            cvar: avg(&|r| r.cvar),
            worst_device_cvar: avg(&|r| r.worst_device_cvar),
            worst_device_mean: avg(&|r| r.worst_device_mean),
            ccdf: (0..width).map(|g| avg(&|r| r.ccdf[g])).collect(),
            overflowed: runs.iter().any(|r| r.overflowed),
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Total frequency of every server, Hz.
    Frequency,
    /// Task size of every device, bits.
    TaskSize,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Frequency => "frequency",
            Axis::TaskSize => "task_size",
        }
    }

    pub fn apply(self, s: &Scenario, value: f64) -> Scenario {
        match self {
            Axis::Frequency => s.clone().with_server_frequency(value),
            Axis::TaskSize => s.clone().with_task_size(value),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "frequency" | "F" => Ok(Axis::Frequency),
            "task_size" | "task-size" | "d" => Ok(Axis::TaskSize),
            _ => Err(format!("unknown axis `{s}` (expected frequency or task_size)")),
        }
    }
}

/// One (strategy, value) point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub strategy: StrategyKind,
    pub value: f64,
    /// Planned objective, or why planning failed.
    pub plan: Result<Plan, String>,
    pub runs: Vec<RunMetrics>,
    pub ensemble: Option<Ensemble>,
}

impl SweepPoint {
    /// Infeasible plan or a runaway queue in any run.
    pub fn unstable(&self) -> bool {
        self.plan.is_err() || self.ensemble.as_ref().is_none_or(|e| e.overflowed)
    }
}

/// Solves `strategy` on a planner, sharing the planner's analytics.
pub fn plan_strategy(planner: &Planner, strategy: StrategyKind, guard: u64) -> Result<Plan, PlanError> {
    let terms = strategy.terms(planner.scenario.risk.beta);
    if strategy.exhaustive() {
        Ok(solve_optimal(planner, strategy, terms, guard)?.plan)
    } else {
        planner.solve_heuristic(strategy, terms)
    }
}

/// Planners for every sweep value. Frequency sweeps reuse one set of link
/// analytics, since those do not depend on server frequency.
fn sweep_planners(
    base: &Scenario,
    axis: Axis,
    values: &[f64],
    options: AnalysisOptions,
    exec: Execution,
) -> Result<Vec<Planner>, ExperimentError> {
    base.validate().map_err(PlanError::Scenario)?;
    match axis {
        Axis::Frequency => {
            let analytics = analyze_scenario(base, options, exec);
            Ok(values
                .iter()
                .map(|&v| Planner {
                    scenario: axis.apply(base, v),
                    analytics: analytics.clone(),
                    execution: exec,
                })
                .collect())
        }
        Axis::TaskSize => values
            .iter()
            .map(|&v| Planner::new(axis.apply(base, v), options, exec).map_err(Into::into))
            .collect(),
    }
}

/// Plans and simulates every (value, strategy) pair over the seed ensemble.
/// Points whose plan is infeasible are kept, with the reason, and no runs.
pub fn sweep(
    base: &Scenario,
    axis: Axis,
    values: &[f64],
    strategies: &[StrategyKind],
    cfg: &SimConfig,
    options: AnalysisOptions,
    exec: Execution,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(ExperimentError::Sweep("values must be positive and finite".into()));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::Sweep("values must be strictly ascending".into()));
    }
    let planners = sweep_planners(base, axis, values, options, exec)?;
    let pairs: Vec<(usize, StrategyKind)> = (0..values.len())
        .flat_map(|v| strategies.iter().map(move |&k| (v, k)))
        .collect();
    let plans: Vec<Result<Plan, String>> = exec.map_slice(&pairs, |&(v, k)| {
        plan_strategy(&planners[v], k, DEFAULT_GUARD).map_err(|e| e.to_string())
    });

    // Flatten to (pair, seed) jobs so small ensembles still fill the pool.
    let jobs: Vec<(usize, u64)> = (0..pairs.len())
        .filter(|&p| plans[p].is_ok())
        .flat_map(|p| cfg.seeds.iter().map(move |&s| (p, s)))
        .collect();
    let results = exec.map_slice(&jobs, |&(p, seed)| {
        let plan = plans[p].as_ref().expect("filtered");
        run_metrics(&planners[pairs[p].0].scenario, plan, cfg, &[], seed)
    });
    let mut runs: Vec<Vec<RunMetrics>> = vec![Vec::new(); pairs.len()];
    for (&(p, _), r) in jobs.iter().zip(results) {
        runs[p].push(r?);
    }

    Ok(pairs
        .iter()
        .zip(plans)
        .zip(runs)
        .map(|((&(v, strategy), plan), runs)| SweepPoint {
            strategy,
            value: values[v],
            ensemble: (!runs.is_empty()).then(|| Ensemble::from_runs(&runs)),
            plan,
            runs,
        })
        .collect())
}

/// One strategy's row in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub strategy: StrategyKind,
    pub plan: Result<Plan, String>,
    pub ensemble: Option<Ensemble>,
    /// `(T_heuristic − T_optimal)/T_optimal` on the optimized objective, for
    /// heuristics whose exhaustive counterpart was solved.
    pub gap_to_optimal: Option<f64>,
}

/// Plans every strategy on one scenario and simulates each over the ensemble.
/// Exhaustive strategies beyond the guard come back as errors in their row.
pub fn compare(
    planner: &Planner,
    strategies: &[StrategyKind],
    cfg: &SimConfig,
    grid: &[f64],
    guard: u64,
) -> Result<Vec<CompareRow>, ExperimentError> {
    let exec = planner.execution;
    let plans: Vec<Result<Plan, String>> =
        exec.map_slice(strategies, |&k| plan_strategy(planner, k, guard).map_err(|e| e.to_string()));
    let mut rows = Vec::with_capacity(strategies.len());
    for (&strategy, plan) in strategies.iter().zip(&plans) {
        let ensemble = match plan {
            Ok(p) => Some(Ensemble::from_runs(&simulate_plan(&planner.scenario, p, cfg, grid, exec)?)),
            Err(_) => None,
        };
        rows.push(CompareRow {
            strategy,
            plan: plan.clone(),
            ensemble,
            gap_to_optimal: None,
        });
    }
    let optimized = |k: StrategyKind| -> Option<f64> {
        strategies
            .iter()
            .position(|&s| s == k)
            .and_then(|i| plans[i].as_ref().ok())
            .map(|p| p.optimized_objective)
    };
    for row in &mut rows {
        let counterpart = match row.strategy {
            StrategyKind::QR => StrategyKind::QROpt,
            StrategyKind::QNR => StrategyKind::QNROpt,
            _ => continue,
        };
        if let (Some(h), Some(o)) = (optimized(row.strategy), optimized(counterpart)) {
            row.gap_to_optimal = Some(relative_gap(h, o));
        }
    }
    Ok(rows)
}

/// `(heuristic − optimal)/optimal`.
pub fn relative_gap(heuristic: f64, optimal: f64) -> f64 {
    (heuristic - optimal) / optimal
}
