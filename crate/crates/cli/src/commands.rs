//! The four subcommands.

use std::path::Path;

use offload_core::experiment::{self, Axis, SimConfig, SweepPoint};
use offload_core::simulator::{self, Target};
use offload_core::{
    generate_scenario, load_scenario, AnalysisOptions, Execution, Plan, Planner, Scenario, StrategyKind,
};

use crate::error::CliError;
use crate::output::{ccdf_grid, num, OutDir, RunManifest, ScenarioSource};
use crate::{ScenarioArgs, SimArgs};

const SCENARIO_FILE: &str = "scenario.json";

fn options(args: &ScenarioArgs) -> AnalysisOptions {
    AnalysisOptions {
        full_pk: args.full_pk,
        corrected_rho_s: args.corrected_rho_s,
    }
}

fn execution(args: &ScenarioArgs) -> Execution {
    if args.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

/// Loads or generates the scenario and applies the risk overrides.
fn scenario(args: &ScenarioArgs) -> Result<(Scenario, ScenarioSource), CliError> {
    let (mut s, source) = match (&args.scenario, args.generate) {
        (Some(path), _) => (load_scenario(path)?, ScenarioSource::File(path.clone())),
        (None, Some(g)) => (
            generate_scenario(g.seed, g.devices, g.servers)?,
            ScenarioSource::Generate {
                devices: g.devices,
                servers: g.servers,
                seed: g.seed,
            },
        ),
        (None, None) => return Err(CliError::Input("give --scenario or --generate".into())),
    };
    if let Some(a) = args.alpha {
        s.risk.alpha = a;
    }
    if let Some(b) = args.beta {
        s.risk.beta = b;
    }
    if let Some(k) = args.samples {
        s.risk.cvar_samples = k;
    }
    s.validate().map_err(|v| CliError::Input(offload_core::PlanError::Scenario(v).to_string()))?;
    Ok((s, source))
}

fn planner(args: &ScenarioArgs) -> Result<(Planner, ScenarioSource), CliError> {
    let (s, source) = scenario(args)?;
    Ok((Planner::new(s, options(args), execution(args))?, source))
}

struct ManifestParts<'a> {
    command: &'static str,
    args: &'a ScenarioArgs,
    source: ScenarioSource,
    scenario: &'a Scenario,
    strategies: Vec<StrategyKind>,
    out: &'a Path,
}

fn manifest(p: ManifestParts<'_>) -> RunManifest {
    RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        csv_schema: crate::output::CSV_SCHEMA,
        command: p.command,
        argv: std::env::args().collect(),
        scenario: p.source,
        scenario_file: SCENARIO_FILE,
        strategies: p.strategies,
        alpha: p.scenario.risk.alpha,
        beta: p.scenario.risk.beta,
        cvar_samples: p.scenario.risk.cvar_samples,
        options: options(p.args),
        axis: None,
        values: None,
        horizon: None,
        warmup: None,
        seeds: Vec::new(),
        output_dir: p.out.to_path_buf(),
    }
}

fn sim_config(sim: &SimArgs, alpha: f64) -> Result<SimConfig, CliError> {
    if sim.seeds == 0 {
        return Err(CliError::Input("--seeds must be at least 1".into()));
    }
    let mut cfg = SimConfig::new(sim.horizon, sim.seeds, alpha);
    if let Some(w) = sim.warmup {
        cfg.warmup = w;
    }
    Ok(cfg)
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn print_plan(plan: &Plan) {
    println!(
        "strategy {}  objective T {}  optimized {}  (alpha {}, beta {})",
        plan.strategy,
        num(plan.objective),
        num(plan.optimized_objective),
        plan.alpha,
        plan.beta
    );
    println!("{:>6} {:>6} {:>14} {:>14} {:>14} {:>14}", "device", "server", "freq_GHz", "mean_bound_s", "cvar_bound_s", "mean_risk_s");
    for (o, d) in plan.offloads.iter().zip(&plan.per_device) {
        println!(
            "{:>6} {:>6} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            o.device,
            o.server,
            o.frequency_hz / 1e9,
            d.bound.map_or(f64::INFINITY, |b| b.mean_bound),
            d.bound.map_or(f64::INFINITY, |b| b.cvar_bound),
            d.mean_risk
        );
    }
}

fn plan_rows(plan: &Plan) -> Vec<Vec<String>> {
    plan.offloads
        .iter()
        .zip(&plan.per_device)
        .map(|(o, d)| {
            vec![
                o.device.to_string(),
                o.server.to_string(),
                num(o.frequency_hz),
                num(d.bound.map_or(f64::INFINITY, |b| b.mean_bound)),
                num(d.bound.map_or(f64::INFINITY, |b| b.cvar_bound)),
                num(d.mean_risk),
            ]
        })
        .collect()
}

pub const PLAN_HEADER: [&str; 6] = ["device", "server", "frequency_hz", "mean_bound", "cvar_bound", "mean_risk"];

pub fn plan(args: &ScenarioArgs, strategy: StrategyKind, out: Option<&Path>) -> Result<(), CliError> {
    let (p, source) = planner(args)?;
    let plan = p.solve(strategy)?;
    print_plan(&plan);
    if let Some(out) = out {
        let dir = OutDir::create(out)?;
        dir.text(SCENARIO_FILE, &p.scenario.to_json())?;
        dir.json("plan.json", &plan)?;
        dir.csv("plan.csv", &PLAN_HEADER, &plan_rows(&plan))?;
        dir.json(
            "manifest.json",
            &manifest(ManifestParts {
                command: "plan",
                args,
                source,
                scenario: &p.scenario,
                strategies: vec![strategy],
                out,
            }),
        )?;
    }
    Ok(())
}

/// Reads a plan file and re-derives its bounds against this scenario.
fn load_plan(p: &Planner, path: &Path) -> Result<Plan, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let plan: Plan =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("malformed plan {}: {e}", path.display())))?;
    let bad = plan.violations(&p.scenario);
    if !bad.is_empty() {
        return Err(CliError::Input(format!("plan does not fit the scenario: {}", bad.join("; "))));
    }
    Ok(p.evaluate(plan.strategy, &plan.assignment(), &plan.frequencies(), plan.optimized_objective)?)
}

pub const RECORD_HEADER: [&str; 7] = ["device", "arrival", "w_d", "t_d", "w_s", "t_s", "total"];
pub const DEVICE_HEADER: [&str; 14] = [
    "device", "server", "frequency_hz", "tasks", "mean", "var", "cvar", "p99", "mean_bound", "cvar_bound", "w_d", "t_d",
    "w_s", "t_s",
];
pub const CCDF_HEADER: [&str; 2] = ["delay", "ccdf"];

pub fn simulate(
    args: &ScenarioArgs,
    strategy: Option<StrategyKind>,
    plan_file: Option<&Path>,
    horizon: f64,
    warmup: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let (p, source) = planner(args)?;
    let plan = match plan_file {
        Some(path) => load_plan(&p, path)?,
        None => p.solve(strategy.unwrap_or(StrategyKind::QR))?,
    };
    let alpha = p.scenario.risk.alpha;
    let warmup = warmup.unwrap_or_else(|| simulator::default_warmup(horizon));
    let r = simulator::run(&p.scenario, &plan, horizon, warmup, seed)?;
    let stats = simulator::statistics(&r, alpha)?;
    let pooled = simulator::aggregate_statistics(&r, alpha)?;
    let grid = ccdf_grid();
    let ccdf = simulator::ccdf(&r, Target::Aggregate, &grid)?;

    println!(
        "strategy {}  seed {seed}  window [{}, {}] s  {} tasks  mean {}  p99 {}  CVaR {}",
        plan.strategy,
        num(warmup),
        num(horizon),
        pooled.count,
        num(pooled.mean),
        num(pooled.p99),
        num(pooled.cvar_alpha)
    );
    println!("{:>6} {:>8} {:>14} {:>14} {:>14} {:>14}", "device", "tasks", "mean_s", "mean_bound_s", "cvar_s", "cvar_bound_s");
    let mut device_rows = Vec::with_capacity(stats.len());
    for (d, rep) in stats.iter().zip(&plan.per_device) {
        let (mb, cb) = rep.bound.map_or((f64::INFINITY, f64::INFINITY), |b| (b.mean_bound, b.cvar_bound));
        println!(
            "{:>6} {:>8} {:>14.6} {:>14.6} {:>14.6} {:>14.6}",
            d.device, d.summary.count, d.summary.mean, mb, d.summary.cvar_alpha, cb
        );
        let o = &plan.offloads[d.device];
        device_rows.push(vec![
            d.device.to_string(),
            o.server.to_string(),
            num(o.frequency_hz),
            d.summary.count.to_string(),
            num(d.summary.mean),
            num(d.summary.var_alpha),
            num(d.summary.cvar_alpha),
            num(d.summary.p99),
            num(mb),
            num(cb),
            num(d.mean.device_wait),
            num(d.mean.tx),
            num(d.mean.server_wait),
            num(d.mean.compute),
        ]);
    }
    if r.any_overflow() {
        println!("warning: a device queue reached its cap; the plan is unstable in simulation");
    }

    let dir = OutDir::create(out)?;
    dir.text(SCENARIO_FILE, &p.scenario.to_json())?;
    dir.json("plan.json", &plan)?;
    let records: Vec<Vec<String>> = r
        .records()
        .iter()
        .map(|t| {
            vec![
                t.device.to_string(),
                num(t.arrival),
                num(t.device_wait),
                num(t.tx),
                num(t.server_wait),
                num(t.compute),
                num(t.total),
            ]
        })
        .collect();
    dir.csv("records.csv", &RECORD_HEADER, &records)?;
    dir.csv("devices.csv", &DEVICE_HEADER, &device_rows)?;
    let ccdf_rows: Vec<Vec<String>> = grid.iter().zip(&ccdf).map(|(w, c)| vec![num(*w), num(*c)]).collect();
    dir.csv("ccdf.csv", &CCDF_HEADER, &ccdf_rows)?;
    let mut m = manifest(ManifestParts {
        command: "simulate",
        args,
        source,
        scenario: &p.scenario,
        strategies: vec![plan.strategy],
        out,
    });
    m.horizon = Some(horizon);
    m.warmup = Some(warmup);
    m.seeds = vec![seed];
    dir.json("manifest.json", &m)
}

pub const SWEEP_HEADER: [&str; 11] = [
    "strategy", "axis", "value", "runs", "mean", "p99", "cvar", "worst_device_cvar", "objective", "unstable", "note",
];
pub const RUNS_HEADER: [&str; 9] =
    ["strategy", "value", "seed", "tasks", "mean", "p99", "cvar", "worst_device_cvar", "overflowed"];

fn sweep_note(p: &SweepPoint) -> String {
    match (&p.plan, &p.ensemble) {
        (Err(e), _) => e.clone(),
        (Ok(_), Some(e)) if e.overflowed => "queue overflow in simulation".into(),
        _ => String::new(),
    }
}

pub fn sweep(
    args: &ScenarioArgs,
    sim: &SimArgs,
    axis: Axis,
    values: &[f64],
    strategies: &[StrategyKind],
    out: &Path,
) -> Result<(), CliError> {
    let (s, source) = scenario(args)?;
    let cfg = sim_config(sim, s.risk.alpha)?;
    let mut points = experiment::sweep(&s, axis, values, strategies, &cfg, options(args), execution(args))?;
    points.sort_by(|a, b| a.strategy.name().cmp(b.strategy.name()).then(a.value.total_cmp(&b.value)));

    println!("{:>10} {:>14} {:>12} {:>12} {:>9}", "strategy", axis.name(), "mean_s", "p99_s", "unstable");
    let mut rows = Vec::with_capacity(points.len());
    let mut runs = Vec::new();
    for p in &points {
        let e = p.ensemble.as_ref();
        println!(
            "{:>10} {:>14} {:>12.6} {:>12.6} {:>9}",
            p.strategy.name(),
            num(p.value),
            e.map_or(f64::NAN, |e| e.mean),
            e.map_or(f64::NAN, |e| e.p99),
            p.unstable()
        );
        rows.push(vec![
            p.strategy.name().to_string(),
            axis.name().to_string(),
            num(p.value),
            p.runs.len().to_string(),
            opt_num(e.map(|e| e.mean)),
            opt_num(e.map(|e| e.p99)),
            opt_num(e.map(|e| e.cvar)),
            opt_num(e.map(|e| e.worst_device_cvar)),
            opt_num(p.plan.as_ref().ok().map(|pl| pl.objective)),
            p.unstable().to_string(),
            sweep_note(p),
        ]);
        for r in &p.runs {
            runs.push(vec![
                p.strategy.name().to_string(),
                num(p.value),
                r.seed.to_string(),
                r.tasks.to_string(),
                num(r.mean),
                num(r.p99),
                num(r.cvar),
                num(r.worst_device_cvar),
                r.overflowed.to_string(),
            ]);
        }
    }

    let dir = OutDir::create(out)?;
    dir.text(SCENARIO_FILE, &s.to_json())?;
    dir.csv("sweep.csv", &SWEEP_HEADER, &rows)?;
    dir.csv("runs.csv", &RUNS_HEADER, &runs)?;
    let mut m = manifest(ManifestParts {
        command: "sweep",
        args,
        source,
        scenario: &s,
        strategies: strategies.to_vec(),
        out,
    });
    m.axis = Some(axis);
    m.values = Some(values.to_vec());
    m.horizon = Some(cfg.horizon);
    m.warmup = Some(cfg.warmup);
    m.seeds = cfg.seeds.clone();
    dir.json("manifest.json", &m)
}

pub const COMPARE_HEADER: [&str; 10] = [
    "strategy", "status", "objective", "optimized_objective", "mean", "p99", "cvar", "worst_device_cvar",
    "gap_to_optimal", "note",
];
pub const COMPARE_CCDF_HEADER: [&str; 3] = ["strategy", "delay", "ccdf"];

pub fn compare(
    args: &ScenarioArgs,
    sim: &SimArgs,
    strategies: &[StrategyKind],
    guard: u64,
    out: &Path,
) -> Result<(), CliError> {
    let (p, source) = planner(args)?;
    let cfg = sim_config(sim, p.scenario.risk.alpha)?;
    let count = (p.scenario.num_servers() as f64).powi(p.scenario.num_devices() as i32);
    let within_guard = |k: &StrategyKind| !k.exhaustive() || count <= guard as f64;
    let kept: Vec<StrategyKind> = strategies.iter().copied().filter(within_guard).collect();
    let grid = ccdf_grid();
    let rows = experiment::compare(&p, &kept, &cfg, &grid, guard)?;

    println!(
        "{:>10} {:>10} {:>12} {:>10} {:>10} {:>10} {:>9}",
        "strategy", "status", "objective", "mean_s", "p99_s", "cvar_s", "gap"
    );
    let mut table = Vec::with_capacity(strategies.len());
    let mut ccdf = Vec::new();
    for &k in strategies {
        let Some(row) = rows.iter().find(|r| r.strategy == k) else {
            println!("{:>10} {:>10}", k.name(), "skipped");
            let note = format!("{count} assignments exceed the guard of {guard}");
            let mut cells = vec![k.name().to_string(), "skipped".to_string()];
            cells.extend(std::iter::repeat_n(String::new(), 7));
            cells.push(note);
            table.push(cells);
            continue;
        };
        let (status, note) = match &row.plan {
            Ok(_) => ("ok", String::new()),
            Err(e) => ("infeasible", e.clone()),
        };
        let plan = row.plan.as_ref().ok();
        let e = row.ensemble.as_ref();
        println!(
            "{:>10} {:>10} {:>12.6} {:>10.6} {:>10.6} {:>10.6} {:>9}",
            k.name(),
            status,
            plan.map_or(f64::NAN, |p| p.objective),
            e.map_or(f64::NAN, |e| e.mean),
            e.map_or(f64::NAN, |e| e.p99),
            e.map_or(f64::NAN, |e| e.cvar),
            row.gap_to_optimal.map(|g| format!("{:.2}%", 100.0 * g)).unwrap_or_default()
        );
        table.push(vec![
            k.name().to_string(),
            status.to_string(),
            opt_num(plan.map(|p| p.objective)),
            opt_num(plan.map(|p| p.optimized_objective)),
            opt_num(e.map(|e| e.mean)),
            opt_num(e.map(|e| e.p99)),
            opt_num(e.map(|e| e.cvar)),
            opt_num(e.map(|e| e.worst_device_cvar)),
            opt_num(row.gap_to_optimal),
            note,
        ]);
        if let Some(e) = e {
            ccdf.extend(
                grid.iter()
                    .zip(&e.ccdf)
                    .map(|(w, c)| vec![k.name().to_string(), num(*w), num(*c)]),
            );
        }
    }

    let dir = OutDir::create(out)?;
    dir.text(SCENARIO_FILE, &p.scenario.to_json())?;
    dir.csv("compare.csv", &COMPARE_HEADER, &table)?;
    dir.csv("ccdf.csv", &COMPARE_CCDF_HEADER, &ccdf)?;
    let plans: Vec<&Plan> = rows.iter().filter_map(|r| r.plan.as_ref().ok()).collect();
    dir.json("plans.json", &plans)?;
    let mut m = manifest(ManifestParts {
        command: "compare",
        args,
        source,
        scenario: &p.scenario,
        strategies: strategies.to_vec(),
        out,
    });
    m.horizon = Some(cfg.horizon);
    m.warmup = Some(cfg.warmup);
    m.seeds = cfg.seeds.clone();
    dir.json("manifest.json", &m)
}
