//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Not part of the default `cargo test` run (several criteria simulate for
//! minutes). Run with
//!
//! ```text
//! cargo test --release -p offload-core --test acceptance [-- <ids>...]
//! ```
//!
//! Exits nonzero when any selected criterion fails.

use std::time::{Duration, Instant};

use offload_core::channel::{self, FadingModel};
use offload_core::experiment::{self, relative_gap, sweep, Axis, Ensemble, SimConfig};
use offload_core::planner::{
    allocate_server, assign_costs, solve_bottleneck_assignment, AssignCost, DeviceCost, ServerTerm,
};
use offload_core::queueing::{heavy_traffic_wait_cdf, kingman_bound};
use offload_core::risk::{self, Provenance, SampleSet};
use offload_core::simulator;
use offload_core::{generate_scenario, AnalysisOptions, Execution, PlanError, Planner, Scenario, StrategyKind};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, LogNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

const ALPHAS: [f64; 3] = [0.9, 0.95, 0.99];

/// Scenario used for the ensemble shape criteria.
const SHAPE_SCENARIO: (u64, usize, usize) = (1, 8, 2);
const SHAPE_HORIZON: f64 = 300.0;
const SHAPE_SEEDS: u64 = 10;

fn samples(v: Vec<f64>) -> SampleSet {
    SampleSet::new(v, Provenance::Simulation).expect("valid samples")
}

/// Mixed-shape nonnegative samples with deliberate ties.
fn random_values(rng: &mut StdRng, k: usize) -> Vec<f64> {
    let kind = rng.random_range(0..4);
    let exp = Exp::new(rng.random_range(0.5..50.0)).unwrap();
    let ln = LogNormal::new(rng.random_range(-3.0..1.0), rng.random_range(0.1..2.0)).unwrap();
    (0..k)
        .map(|_| match kind {
            0 => exp.sample(rng),
            1 => ln.sample(rng),
            2 => rng.random_range(0.0..10.0),
            _ => (rng.random_range(0..20) as f64) * 0.25,
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn c1_cvar_lp_matches_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    // (1−α)K must be an integer for the tail mean and the LP optimum to
    // coincide, so K runs over multiples of 100.
    for _ in 0..1000 {
        let k = 100 * rng.random_range(1..=100);
        let alpha = ALPHAS[rng.random_range(0..3)];
        let s = samples(random_values(&mut rng, k));
        let lp = risk::cvar_lp(&s, alpha).unwrap().value;
        let emp = risk::cvar_empirical(&s, alpha).unwrap();
        let e = rel(lp, emp);
        worst = worst.max(e);
        if e > 1e-9 {
            failures += 1;
        }
    }
    // The generic simplex solves the same program on smaller sets.
    let mut simplex_worst = 0.0_f64;
    for _ in 0..10 {
        let k = 100 * rng.random_range(1..=2);
        let alpha = ALPHAS[rng.random_range(0..3)];
        let s = samples(random_values(&mut rng, k));
        let lp = risk::cvar_lp_simplex(&s, alpha).unwrap().value;
        let emp = risk::cvar_empirical(&s, alpha).unwrap();
        simplex_worst = simplex_worst.max(rel(lp, emp));
    }
    if simplex_worst > 1e-9 {
        failures += 1;
    }
    Outcome::new(
        failures == 0,
        format!("1000 sets, worst rel err {worst:.2e}; simplex on 10 sets, worst {simplex_worst:.2e}"),
    )
}

fn c2_exponential_cvar_matches_sampling() -> Outcome {
    let mut rng = StdRng::seed_from_u64(202);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let lambda = rng.random_range(1.0..40.0);
        let v = rng.random_range(1e-6..1e-2);
        let rho = rng.random_range(0.05..0.95);
        let alpha = rng.random_range(0.8..0.995);
        let closed = risk::cvar_exponential_wait(lambda, v, rho, alpha).unwrap();
        // Inverse CDF of 1 − exp(−w/m).
        let m = lambda * v / (2.0 * (1.0 - rho));
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| -m * (1.0 - rng.random::<f64>()).ln())
            .collect();
        // The sampled law is the crate's waiting-time CDF.
        let probe = draws[0];
        let u = heavy_traffic_wait_cdf(probe, lambda, v, rho).unwrap();
        assert!((u - (1.0 - (-probe / m).exp())).abs() < 1e-12);
        let emp = risk::cvar_empirical(&samples(draws), alpha).unwrap();
        worst = worst.max(rel(emp, closed));
    }
    Outcome::new(worst <= 0.01, format!("20 tuples, worst rel err {:.3}%", 100.0 * worst))
}

/// One device on a constant-gain link with transmission time `tx`.
fn md1_scenario(lambda: f64, tx: f64) -> Scenario {
    let mut s = generate_scenario(1, 1, 1).unwrap();
    s.risk.cvar_samples = 1000;
    s.devices[0].arrival_rate = lambda;
    s.channels[0][0].fading = FadingModel::Constant { gain: 0.1 };
    let c = &s.channels[0][0];
    let rate = channel::transmission_rate(0.1, s.devices[0].tx_power, c.bandwidth, c.noise_power, c.path_loss);
    s.devices[0].data_size = tx * rate;
    s
}

fn c3_md1_calibration() -> Outcome {
    let tx = 0.1;
    let mut lines = Vec::new();
    let mut pass = true;
    for (i, lambda) in [3.0, 5.0, 7.0].into_iter().enumerate() {
        let s = md1_scenario(lambda, tx);
        let plan = offload_core::planner::solve(&s, StrategyKind::QR).unwrap();
        let horizon = 300_000.0 / (0.9 * lambda);
        let r = simulator::run(&s, &plan, horizon, simulator::default_warmup(horizon), 30 + i as u64).unwrap();
        let recs = &r.devices[0].records;
        let mean = recs.iter().map(|x| x.device_wait).sum::<f64>() / recs.len() as f64;
        let rho = lambda * tx;
        let expected = lambda * tx * tx / (2.0 * (1.0 - rho));
        let e = rel(mean, expected);
        pass &= recs.len() >= 100_000 && e <= 0.05;
        lines.push(format!("rho {rho:.1}: {} tasks, err {:.2}%", recs.len(), 100.0 * e));
    }
    Outcome::new(pass, lines.join("; "))
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn c4_bounds_dominate_simulation() -> Outcome {
    const REPS: u64 = 10;
    let horizon = 1000.0;
    let mut checked = 0;
    let mut violations = Vec::new();
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let s = generate_scenario(seed, 1, 1).unwrap();
        let planner = Planner::new(s.clone(), AnalysisOptions::default(), Execution::default()).unwrap();
        let Ok(plan) = planner.solve(StrategyKind::QR) else {
            continue;
        };
        checked += 1;
        let link = planner.analytics.link(0, 0).unwrap();
        let bound = plan.per_device[0].bound.expect("stable plan has a bound");
        let lambda = link.arrival_rate;
        let kingman = kingman_bound(lambda, 1.0 / (lambda * lambda), link.tx_variance, link.rho).unwrap();

        let runs: Vec<(f64, f64, f64)> = Execution::default().map_range(REPS as usize, |k| {
            let r = simulator::run(&s, &plan, horizon, simulator::default_warmup(horizon), k as u64).unwrap();
            let st = &simulator::statistics(&r, 0.99).unwrap()[0];
            (st.mean.device_wait, st.mean.server_wait, st.summary.cvar_alpha)
        });
        let check = |name: &str, bound: f64, xs: Vec<f64>, violations: &mut Vec<String>| {
            let (m, sd) = mean_sd(&xs);
            let lower = m - 3.0 * sd / (REPS as f64).sqrt();
            if bound < lower {
                violations.push(format!("seed {seed} {name}: bound {bound:.4e} < sim {m:.4e} - 3se"));
            }
        };
        check("device wait", kingman, runs.iter().map(|r| r.0).collect(), &mut violations);
        check("server wait", bound.mean.server_wait, runs.iter().map(|r| r.1).collect(), &mut violations);
        check("cvar", bound.cvar_bound, runs.iter().map(|r| r.2).collect(), &mut violations);
    }
    let detail = if violations.is_empty() {
        format!("20 links (generator seeds 1..={seed}), 3 bounds each, no violations")
    } else {
        violations.join("; ")
    };
    Outcome::new(violations.is_empty(), detail)
}

/// Exhaustive bottleneck over all `N^M` assignments within core counts.
fn enumerate_bottleneck(cost: &AssignCost, caps: &[usize]) -> Option<f64> {
    let (m, n) = (cost.num_devices(), cost.num_servers());
    let mut best: Option<f64> = None;
    'outer: for k in 0..n.pow(m as u32) {
        let mut load = vec![0; n];
        let mut worst = f64::NEG_INFINITY;
        let mut rest = k;
        for i in 0..m {
            let j = rest % n;
            rest /= n;
            load[j] += 1;
            match cost.get(i, j) {
                Some(a) if load[j] <= caps[j] => worst = worst.max(a),
                _ => continue 'outer,
            }
        }
        best = Some(best.map_or(worst, |b: f64| b.min(worst)));
    }
    best
}

fn c5_bgap_exact() -> Outcome {
    let mut rng = StdRng::seed_from_u64(505);
    let caps = [4, 4];
    let mut mismatches = 0;
    let mut infeasible = 0;
    let kinds = [StrategyKind::QR, StrategyKind::QNR, StrategyKind::NQR, StrategyKind::NQNR];
    let generated: Vec<Option<AssignCost>> = Execution::default().map_range(150, |t| {
        let s = generate_scenario(5000 + t as u64, 8, 2).unwrap();
        let p = Planner::new(s, AnalysisOptions::default(), Execution::Sequential).unwrap();
        let terms = kinds[t % 4].terms(p.scenario.risk.beta);
        assign_costs(&p.analytics, terms).ok()
    });
    let mut instances: Vec<AssignCost> = (0..100)
        .map(|_| {
            AssignCost::from_rows(
                (0..8)
                    .map(|_| {
                        let mut row: Vec<Option<f64>> = (0..2)
                            .map(|_| (rng.random::<f64>() > 0.1).then(|| rng.random_range(0..50) as f64 * 0.1))
                            .collect();
                        if row.iter().all(Option::is_none) {
                            row[rng.random_range(0..2)] = Some(rng.random::<f64>());
                        }
                        row
                    })
                    .collect(),
            )
        })
        .collect();
    // Scenarios with a device that has no stable link are skipped.
    instances.extend(generated.into_iter().flatten().take(100));
    for cost in &instances {
        let oracle = enumerate_bottleneck(cost, &caps);
        match (solve_bottleneck_assignment(cost, &caps), oracle) {
            (Ok(sol), Some(o)) => {
                let realized = sol
                    .assignment
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| cost.get(i, j).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max);
                let within_caps = (0..2).all(|j| sol.assignment.iter().filter(|&&x| x == j).count() <= caps[j]);
                if sol.bottleneck != o || realized != o || !within_caps {
                    mismatches += 1;
                }
            }
            (Err(PlanError::NoAssignment), None) => infeasible += 1,
            _ => mismatches += 1,
        }
    }
    Outcome::new(
        mismatches == 0,
        format!("{} instances, {mismatches} mismatches, {infeasible} agreed infeasible", instances.len()),
    )
}

/// Grid search with zoom over the shares of spare capacity.
fn grid_oracle(devices: &[DeviceCost], capacity: f64) -> f64 {
    let k = devices.len();
    let floors: f64 = devices.iter().map(|d| d.floor).sum();
    let spare = capacity - floors;
    let value = |shares: &[f64]| -> f64 {
        let last = 1.0 - shares.iter().sum::<f64>();
        if last < 0.0 {
            return f64::INFINITY;
        }
        devices
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let s = if i + 1 < k { shares[i] } else { last };
                d.value(d.floor + s * spare)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if k == 1 {
        return value(&[]);
    }
    let dims = k - 1;
    let points = match dims {
        1 => 41,
        2 => 21,
        _ => 11,
    };
    let mut center = vec![1.0 / k as f64; dims];
    let mut half = 1.0;
    let mut best = value(&center);
    let mut idx = vec![0usize; dims];
    let mut x = vec![0.0; dims];
    for _ in 0..200 {
        let mut next = center.clone();
        'grid: loop {
            for d in 0..dims {
                let t = idx[d] as f64 / (points - 1) as f64;
                x[d] = (center[d] - half + 2.0 * half * t).clamp(0.0, 1.0);
            }
            let v = value(&x);
            if v < best {
                best = v;
                next.copy_from_slice(&x);
            }
            for d in 0..dims {
                idx[d] += 1;
                if idx[d] < points {
                    continue 'grid;
                }
                idx[d] = 0;
            }
            break;
        }
        center = next;
        half *= 0.75;
        if half < 1e-15 {
            break;
        }
    }
    best
}

fn c6_frequency_exact() -> Outcome {
    let mut rng = StdRng::seed_from_u64(606);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for t in 0..100 {
        let k = 1 + t % 4;
        let corrected = t % 2 == 1;
        let devices: Vec<DeviceCost> = (0..k)
            .map(|_| {
                let cycles = rng.random_range(1e6..5e7);
                let floor = rng.random_range(5.0..30.0) * cycles;
                DeviceCost {
                    constant: 10f64.powf(rng.random_range(-3.0..0.5)),
                    weight: 3.0 * cycles,
                    floor,
                    server_term: corrected.then(|| ServerTerm {
                        numerator: 10f64.powf(rng.random_range(-4.0..-1.0)),
                        load: floor,
                    }),
                }
            })
            .collect();
        let floors: f64 = devices.iter().map(|d| d.floor).sum();
        let capacity = floors * rng.random_range(1.2..5.0);
        let alloc = allocate_server(&devices, capacity, 0).unwrap();
        let oracle = grid_oracle(&devices, capacity);
        let used: f64 = alloc.frequencies.iter().sum();
        let realized = devices
            .iter()
            .zip(&alloc.frequencies)
            .map(|(d, &f)| d.value(f))
            .fold(f64::NEG_INFINITY, f64::max);
        let e = rel(alloc.objective, oracle);
        worst = worst.max(e);
        if e > 1e-6 || used > capacity * (1.0 + 1e-12) || rel(realized, alloc.objective) > 1e-9 {
            failures += 1;
        }
    }
    Outcome::new(failures == 0, format!("100 instances, worst rel gap {worst:.2e}, {failures} failures"))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn c7_near_optimal() -> Outcome {
    let gaps: Vec<Option<f64>> = (1..=50u64)
        .map(|seed| {
            let s = generate_scenario(seed, 8, 2).unwrap();
            let p = Planner::new(s, AnalysisOptions::default(), Execution::default()).unwrap();
            let h = experiment::plan_strategy(&p, StrategyKind::QR, u64::MAX).ok()?;
            let o = experiment::plan_strategy(&p, StrategyKind::QROpt, u64::MAX).ok()?;
            Some(relative_gap(h.optimized_objective, o.optimized_objective))
        })
        .collect();
    let mut g: Vec<f64> = gaps.iter().flatten().copied().collect();
    if g.is_empty() {
        return Outcome::new(false, "every scenario infeasible");
    }
    g.sort_by(f64::total_cmp);
    let median = quantile(&g, 0.5);
    let pct = |x: f64| 100.0 * x;
    Outcome::new(
        median <= 0.10,
        format!(
            "{} solved, {} infeasible; gap % min {:.2} q1 {:.2} median {:.2} q3 {:.2} max {:.2}",
            g.len(),
            50 - g.len(),
            pct(g[0]),
            pct(quantile(&g, 0.25)),
            pct(median),
            pct(quantile(&g, 0.75)),
            pct(g[g.len() - 1]),
        ),
    )
}

fn shape_scenario() -> Scenario {
    let (seed, m, n) = SHAPE_SCENARIO;
    generate_scenario(seed, m, n).unwrap()
}

fn shape_config() -> SimConfig {
    SimConfig::new(SHAPE_HORIZON, SHAPE_SEEDS, 0.99)
}

fn ensemble(p: &Planner, k: StrategyKind, grid: &[f64]) -> Ensemble {
    let plan = p.solve(k).unwrap();
    let runs = experiment::simulate_plan(&p.scenario, &plan, &shape_config(), grid, p.execution).unwrap();
    Ensemble::from_runs(&runs)
}

fn c8_strategy_shape() -> Outcome {
    let p = Planner::new(shape_scenario(), AnalysisOptions::default(), Execution::default()).unwrap();
    let qnr = ensemble(&p, StrategyKind::QNR, &[]);
    let grid = [qnr.p99];
    let qr = ensemble(&p, StrategyKind::QR, &[]);
    let qnr_tail = ensemble(&p, StrategyKind::QNR, &grid).ccdf[0];
    let nqnr_tail = ensemble(&p, StrategyKind::NQNR, &grid).ccdf[0];
    let risk_ok = qr.worst_device_cvar <= qnr.worst_device_cvar;
    let tail_ok = nqnr_tail >= qnr_tail;
    Outcome::new(
        risk_ok && tail_ok,
        format!(
            "worst-device CVaR Q-R {:.4} vs Q-NR {:.4} ({}); P(T > {:.4}) NQ-NR {:.5} vs Q-NR {:.5} ({})",
            qr.worst_device_cvar,
            qnr.worst_device_cvar,
            if risk_ok { "ok" } else { "violated" },
            grid[0],
            nqnr_tail,
            qnr_tail,
            if tail_ok { "ok" } else { "violated" },
        ),
    )
}

fn sweep_pairs(axis: Axis, base: &Scenario, values: &[f64]) -> Result<Vec<(Ensemble, Ensemble)>, String> {
    let points = sweep(
        base,
        axis,
        values,
        &[StrategyKind::QR, StrategyKind::QNR],
        &shape_config(),
        AnalysisOptions::default(),
        Execution::default(),
    )
    .map_err(|e| e.to_string())?;
    points
        .chunks(2)
        .map(|c| match (&c[0].ensemble, &c[1].ensemble) {
            (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
            _ => Err(format!("infeasible point at {}", c[0].value)),
        })
        .collect()
}

fn describe(values: &[f64], unit: f64, pairs: &[(Ensemble, Ensemble)]) -> String {
    values
        .iter()
        .zip(pairs)
        .map(|(v, (a, b))| {
            format!("{:.2}: Q-R {:.3}/{:.3} Q-NR {:.3}/{:.3}", v / unit, a.mean, a.p99, b.mean, b.p99)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn c9_frequency_shape() -> Outcome {
    let values = [2e9, 4e9, 6e9, 8e9, 10e9];
    let pairs = match sweep_pairs(Axis::Frequency, &shape_scenario(), &values) {
        Ok(p) => p,
        Err(e) => return Outcome::new(false, e),
    };
    let nonincreasing = |f: &dyn Fn(&(Ensemble, Ensemble)) -> f64| pairs.windows(2).all(|w| f(&w[1]) <= f(&w[0]));
    let monotone = nonincreasing(&|p| p.0.mean)
        && nonincreasing(&|p| p.0.p99)
        && nonincreasing(&|p| p.1.mean)
        && nonincreasing(&|p| p.1.p99);
    let p99_ok = pairs.iter().all(|(a, b)| a.p99 <= b.p99);
    let mean_ok = pairs.iter().all(|(a, b)| rel(a.mean, b.mean) <= 0.05);
    Outcome::new(
        monotone && p99_ok && mean_ok,
        format!(
            "monotone {monotone}, Q-R p99 <= Q-NR {p99_ok}, means within 5% {mean_ok}; GHz mean/p99 s: {}",
            describe(&values, 1e9, &pairs)
        ),
    )
}

fn c10_task_size_shape() -> Outcome {
    let values = [0.25e6, 0.5e6, 0.75e6, 1.0e6];
    let base = shape_scenario().with_server_frequency(10e9);
    let pairs = match sweep_pairs(Axis::TaskSize, &base, &values) {
        Ok(p) => p,
        Err(e) => return Outcome::new(false, e),
    };
    let increasing = |f: &dyn Fn(&(Ensemble, Ensemble)) -> f64| pairs.windows(2).all(|w| f(&w[1]) > f(&w[0]));
    let monotone =
        increasing(&|p| p.0.mean) && increasing(&|p| p.0.p99) && increasing(&|p| p.1.mean) && increasing(&|p| p.1.p99);
    let p99_ok = pairs.iter().all(|(a, b)| a.p99 <= b.p99);
    Outcome::new(
        monotone && p99_ok,
        format!(
            "increasing {monotone}, Q-R p99 <= Q-NR {p99_ok}; Mbit mean/p99 s: {}",
            describe(&values, 1e6, &pairs)
        ),
    )
}

fn c11_coherence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1111);
    let cvar = |v: &[f64], a: f64| risk::cvar_empirical(&samples(v.to_vec()), a).unwrap();
    let slack = |x: f64| 1e-12 * x.abs().max(1e-300);
    let mut violations = [0usize; 4];
    for _ in 0..1000 {
        let k = rng.random_range(100..3000);
        let alpha = rng.random_range(0.5..(1.0 - 1.0 / k as f64));
        let a = random_values(&mut rng, k);
        let b = random_values(&mut rng, k);
        let ca = cvar(&a, alpha);
        let cb = cvar(&b, alpha);

        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        if cvar(&sum, alpha) > ca + cb + slack(ca + cb) {
            violations[0] += 1;
        }
        let scale = if rng.random::<f64>() < 0.05 { 0.0 } else { rng.random_range(0.0..10.0) };
        let scaled: Vec<f64> = a.iter().map(|x| scale * x).collect();
        if (cvar(&scaled, alpha) - scale * ca).abs() > slack(scale * ca) {
            violations[1] += 1;
        }
        let shift = rng.random_range(0.0..5.0);
        let shifted: Vec<f64> = a.iter().map(|x| x + shift).collect();
        if (cvar(&shifted, alpha) - (ca + shift)).abs() > slack(ca + shift) {
            violations[2] += 1;
        }
        let higher = rng.random_range(alpha..(1.0 - 1.0 / k as f64));
        if cvar(&a, higher) < ca - slack(ca) {
            violations[3] += 1;
        }
    }
    Outcome::new(
        violations.iter().all(|&v| v == 0),
        format!(
            "1000 cases; violations: subadditivity {}, homogeneity {}, translation {}, alpha-monotonicity {}",
            violations[0], violations[1], violations[2], violations[3]
        ),
    )
}

fn criteria() -> Vec<Criterion> {
    let secs = Duration::from_secs;
    vec![
        Criterion { id: 1, name: "cvar-lp-oracle-equality", budget: Some(secs(10)), run: c1_cvar_lp_matches_oracle },
        Criterion { id: 2, name: "closed-form-cvar-vs-sampling", budget: Some(secs(30)), run: c2_exponential_cvar_matches_sampling },
        Criterion { id: 3, name: "md1-simulator-calibration", budget: Some(secs(60)), run: c3_md1_calibration },
        Criterion { id: 4, name: "bound-dominance", budget: None, run: c4_bounds_dominate_simulation },
        Criterion { id: 5, name: "bottleneck-assignment-exactness", budget: None, run: c5_bgap_exact },
        Criterion { id: 6, name: "frequency-allocation-exactness", budget: None, run: c6_frequency_exact },
        Criterion { id: 7, name: "near-optimality", budget: None, run: c7_near_optimal },
        Criterion { id: 8, name: "strategy-comparison-shape", budget: Some(secs(300)), run: c8_strategy_shape },
        Criterion { id: 9, name: "frequency-sweep-shape", budget: None, run: c9_frequency_shape },
        Criterion { id: 10, name: "task-size-sweep-shape", budget: None, run: c10_task_size_shape },
        Criterion { id: 11, name: "cvar-coherence", budget: None, run: c11_coherence },
    ]
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for c in criteria() {
        if !selected.is_empty() && !selected.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let out = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let pass = out.pass && in_budget;
        let budget_note = match c.budget {
            Some(b) if !in_budget => format!(" [over budget {:.0} s]", b.as_secs_f64()),
            _ => String::new(),
        };
        println!(
            "{} {:>2} {:<32} {:>7.1} s  {}{budget_note}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            out.detail
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
