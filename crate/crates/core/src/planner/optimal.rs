//! Exhaustive search over offloading matrices.
//!
//! Every one of the `N^M` assignments is enumerated, infeasible ones (core
//! counts, unusable links, overloaded servers) are skipped, and the rest get
//! their exact stage-2 frequency split. Ties on the objective go to the
//! lexicographically smallest assignment, so the result does not depend on
//! how the enumeration is split across threads.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{allocate_frequencies, ObjectiveTerms, Plan, PlanError, Planner, StrategyKind};

/// Default cap on the number of enumerated assignments.
pub const DEFAULT_GUARD: u64 = 1_000_000;

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalSearch {
    pub plan: Plan,
    /// Assignments visited, `N^M`.
    pub enumerated: u64,
    /// Assignments that admitted a stable frequency split.
    pub feasible: u64,
}

/// Device 0 is the most significant digit, so index order is lexicographic.
fn decode(mut k: usize, m: usize, n: usize, out: &mut [usize]) {
    for i in (0..m).rev() {
        out[i] = k % n;
        k /= n;
    }
}

#[derive(Clone, Copy)]
struct Best {
    objective: f64,
    index: usize,
}

fn better(a: Option<Best>, b: Option<Best>) -> Option<Best> {
    match (a, b) {
        (Some(x), Some(y)) => match x.objective.total_cmp(&y.objective).then(x.index.cmp(&y.index)) {
            Ordering::Greater => Some(y),
            _ => Some(x),
        },
        (x, None) => x,
        (None, y) => y,
    }
}

pub fn solve_optimal(
    planner: &Planner,
    strategy: StrategyKind,
    terms: ObjectiveTerms,
    guard: u64,
) -> Result<OptimalSearch, PlanError> {
    let s = &planner.scenario;
    let (m, n) = (s.num_devices(), s.num_servers());
    let count = (n as f64).powi(m as i32);
    if count > guard as f64 {
        return Err(PlanError::GuardExceeded { count, guard });
    }
    let total = n.pow(m as u32);
    let caps = planner.capacities();
    let usable: Vec<Vec<bool>> = (0..m)
        .map(|i| (0..n).map(|j| planner.analytics.link(i, j).is_ok()).collect())
        .collect();

    let chunks = total.div_ceil(CHUNK);
    let results = planner.execution.map_range(chunks, |c| {
        let mut x = vec![0; m];
        let mut load = vec![0; n];
        let mut best = None;
        let mut feasible = 0u64;
        for k in c * CHUNK..((c + 1) * CHUNK).min(total) {
            decode(k, m, n, &mut x);
            load.iter_mut().for_each(|l| *l = 0);
            x.iter().for_each(|&j| load[j] += 1);
            if load.iter().zip(&caps).any(|(l, c)| l > c) || (0..m).any(|i| !usable[i][x[i]]) {
                continue;
            }
            if let Ok(a) = allocate_frequencies(&x, s, &planner.analytics, terms) {
                feasible += 1;
                best = better(best, Some(Best {
                    objective: a.objective,
                    index: k,
                }));
            }
        }
        (best, feasible)
    });
    let feasible = results.iter().map(|r| r.1).sum();
    let best = results.into_iter().fold(None, |acc, r| better(acc, r.0)).ok_or(PlanError::NoAssignment)?;

    let mut x = vec![0; m];
    decode(best.index, m, n, &mut x);
    let alloc = allocate_frequencies(&x, s, &planner.analytics, terms)?;
    let plan = planner.evaluate(strategy, &x, &alloc.frequencies, alloc.objective)?;
    Ok(OptimalSearch {
        plan,
        enumerated: total as u64,
        feasible,
    })
}
