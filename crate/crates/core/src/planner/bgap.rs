//! Stage 1: bottleneck generalized assignment.
//!
//! Minimizes `max_i A[i][σ(i)]` over assignments σ that respect server core
//! counts. The optimum is one of the distinct finite entries of `A`; binary
//! search over them, testing each threshold with a capacitated bipartite
//! matching. Among the bottleneck-optimal assignments the one with the least
//! total cost is returned (Hungarian method on core slots).

use serde::{Deserialize, Serialize};

use super::{AssignCost, PlanError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottleneckSolution {
    /// Server of each device.
    pub assignment: Vec<usize>,
    /// `max_i A[i][assignment[i]]`.
    pub bottleneck: f64,
}

/// Capacitated matching restricted to entries `<= threshold`. Returns the
/// server of each device if every device can be matched.
pub fn match_under(cost: &AssignCost, capacities: &[usize], threshold: f64) -> Option<Vec<usize>> {
    let m = cost.num_devices();
    let n = capacities.len();
    let allowed = |i: usize, j: usize| cost.get(i, j).is_some_and(|a| a <= threshold);
    let mut owner: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut of: Vec<Option<usize>> = vec![None; m];

    fn augment(
        i: usize,
        seen: &mut [bool],
        owner: &mut [Vec<usize>],
        of: &mut [Option<usize>],
        caps: &[usize],
        allowed: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        for j in 0..caps.len() {
            if !allowed(i, j) || seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].len() < caps[j] {
                owner[j].push(i);
                of[i] = Some(j);
                return true;
            }
            for k in 0..owner[j].len() {
                let other = owner[j][k];
                if augment(other, seen, owner, of, caps, allowed) {
                    owner[j][k] = i;
                    of[i] = Some(j);
                    return true;
                }
            }
        }
        false
    }

    for i in 0..m {
        let mut seen = vec![false; n];
        if !augment(i, &mut seen, &mut owner, &mut of, capacities, &allowed) {
            return None;
        }
    }
    of.into_iter().collect()
}

/// Minimum-cost perfect assignment of rows to columns (`rows <= cols`).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Least-total-cost assignment using only entries `<= threshold`.
fn min_sum_under(cost: &AssignCost, capacities: &[usize], threshold: f64) -> Vec<usize> {
    let m = cost.num_devices();
    let slots: Vec<usize> = capacities
        .iter()
        .enumerate()
        .flat_map(|(j, &c)| std::iter::repeat_n(j, c.min(m)))
        .collect();
    let finite_sum: f64 = (0..m)
        .flat_map(|i| (0..capacities.len()).filter_map(move |j| cost.get(i, j)))
        .map(f64::abs)
        .sum();
    let forbidden = 2.0 * (finite_sum + 1.0);
    let matrix: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            slots
                .iter()
                .map(|&j| match cost.get(i, j) {
                    Some(a) if a <= threshold => a,
                    _ => forbidden,
                })
                .collect()
        })
        .collect();
    hungarian(&matrix).into_iter().map(|s| slots[s]).collect()
}

/// Exact bottleneck assignment.
pub fn solve_bottleneck_assignment(cost: &AssignCost, capacities: &[usize]) -> Result<BottleneckSolution, PlanError> {
    let m = cost.num_devices();
    if capacities.len() != cost.num_servers() {
        return Err(PlanError::Shape(format!(
            "{} capacities for {} servers",
            capacities.len(),
            cost.num_servers()
        )));
    }
    for i in 0..m {
        if (0..capacities.len()).all(|j| cost.get(i, j).is_none()) {
            return Err(PlanError::NoFeasibleLink { device: i });
        }
    }
    let total: usize = capacities.iter().sum();
    if total < m {
        return Err(PlanError::InsufficientCores { cores: total, devices: m });
    }
    let mut values: Vec<f64> = (0..m)
        .flat_map(|i| (0..capacities.len()).filter_map(move |j| cost.get(i, j)))
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    if m == 0 {
        return Ok(BottleneckSolution {
            assignment: Vec::new(),
            bottleneck: f64::NEG_INFINITY,
        });
    }
    // Smallest index whose threshold admits a complete matching.
    let (mut lo, mut hi) = (0usize, values.len() - 1);
    if match_under(cost, capacities, values[hi]).is_none() {
        return Err(PlanError::NoAssignment);
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if match_under(cost, capacities, values[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let bottleneck = values[lo];
    let assignment = min_sum_under(cost, capacities, bottleneck);
    debug_assert!(assignment
        .iter()
        .enumerate()
        .all(|(i, &j)| cost.get(i, j).is_some_and(|a| a <= bottleneck)));
    Ok(BottleneckSolution { assignment, bottleneck })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn costs(rows: Vec<Vec<f64>>) -> AssignCost {
        AssignCost::from_rows(rows.into_iter().map(|r| r.into_iter().map(Some).collect()).collect())
    }

    #[test]
    fn two_by_two_example() {
        let a = costs(vec![vec![1.0, 5.0], vec![2.0, 3.0]]);
        let s = solve_bottleneck_assignment(&a, &[1, 1]).unwrap();
        assert_eq!(s.assignment, vec![0, 1]);
        assert_eq!(s.bottleneck, 3.0);
    }

    #[test]
    fn single_device_takes_cheapest() {
        let a = costs(vec![vec![4.0, 2.0, 3.0]]);
        let s = solve_bottleneck_assignment(&a, &[1, 1, 1]).unwrap();
        assert_eq!(s.assignment, vec![1]);
        assert_eq!(s.bottleneck, 2.0);
    }

    #[test]
    fn infeasible_links_respected() {
        let a = AssignCost::from_rows(vec![vec![None, Some(9.0)], vec![Some(1.0), Some(1.0)]]);
        let s = solve_bottleneck_assignment(&a, &[1, 1]).unwrap();
        assert_eq!(s.assignment, vec![1, 0]);
        let none = AssignCost::from_rows(vec![vec![None, None]]);
        assert!(matches!(
            solve_bottleneck_assignment(&none, &[1, 1]),
            Err(PlanError::NoFeasibleLink { device: 0 })
        ));
        let blocked = AssignCost::from_rows(vec![vec![Some(1.0), None], vec![Some(1.0), None]]);
        assert!(matches!(solve_bottleneck_assignment(&blocked, &[1, 1]), Err(PlanError::NoAssignment)));
        assert!(matches!(
            solve_bottleneck_assignment(&costs(vec![vec![1.0], vec![1.0]]), &[1]),
            Err(PlanError::InsufficientCores { .. })
        ));
    }

    #[test]
    fn capacity_forces_reassignment() {
        // Everyone prefers server 0, which has two cores.
        let a = costs(vec![vec![1.0, 4.0], vec![1.0, 2.0], vec![1.0, 3.0]]);
        let s = solve_bottleneck_assignment(&a, &[2, 2]).unwrap();
        assert_eq!(s.bottleneck, 2.0);
        assert_eq!(s.assignment, vec![0, 1, 0]);
    }

    #[test]
    fn hungarian_small() {
        let c = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        let a = hungarian(&c);
        let total: f64 = a.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        assert_eq!(total, 5.0);
    }
}
