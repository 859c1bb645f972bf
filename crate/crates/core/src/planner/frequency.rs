//! Stage 2: per-server min-max frequency allocation.
//!
//! Given the assignment, servers decouple. On server `j` each hosted device
//! has a mean-risk value `T_i(f)` that is strictly decreasing in its own
//! frequency, so the epigraph problem `min T s.t. T_i(f_i) <= T, Σ f_i <= F`
//! is solved exactly by bisection on `T`: at a candidate `T` every device
//! needs at least `f_i(T) = T_i⁻¹(T)` (and at least its stability floor), and
//! `T` is feasible iff those minima fit in `F`.

use serde::{Deserialize, Serialize};

use super::{ObjectiveTerms, PlanError};
use crate::queueing::{AnalysisOptions, LinkAnalytics};
use crate::risk::exponential_cvar_multiplier;

const MAX_ITERATIONS: usize = 300;

/// Frequency-dependent server-queue term `numerator/(1 − load/f)`, present
/// only when the server utilization is taken as `λˢ·c/f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerTerm {
    pub numerator: f64,
    /// `λˢ·c`, cycles/second.
    pub load: f64,
}

/// Mean-risk value of one device as a function of its core frequency:
/// `constant + weight/f (+ server term)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceCost {
    pub constant: f64,
    /// `(1+β)·c`, cycles.
    pub weight: f64,
    /// Stability floor `λˢ·c`, cycles/second.
    pub floor: f64,
    pub server_term: Option<ServerTerm>,
}

impl DeviceCost {
    /// Cost of a link under the given objective terms.
    pub fn from_link(a: &LinkAnalytics, alpha: f64, opts: AnalysisOptions, terms: ObjectiveTerms) -> Self {
        let beta = terms.beta;
        let mut constant = a.tx_mean() + beta * a.cvar_tx;
        let mut server_term = None;
        if terms.queueing {
            let mult = exponential_cvar_multiplier(alpha);
            // Device wait: mean plus β times its exponential-tail CVaR.
            constant += a.device_wait_mean(opts)
                + beta * a.arrival_rate * a.tx_variance / (2.0 * (1.0 - a.rho)) * mult;
            let server_numerator = a.dep_rate * a.dep_interval_var / 2.0 * (1.0 + beta * mult);
            if opts.corrected_rho_s {
                server_term = Some(ServerTerm {
                    numerator: server_numerator,
                    load: a.stability_floor(),
                });
            } else {
                constant += server_numerator / (1.0 - a.rho_s);
            }
        }
        DeviceCost {
            constant,
            weight: (1.0 + beta) * a.task_cycles,
            floor: a.stability_floor(),
            server_term,
        }
    }

    pub fn value(&self, f: f64) -> f64 {
        let mut v = self.constant + self.weight / f;
        if let Some(s) = self.server_term {
            if f <= s.load {
                return f64::INFINITY;
            }
            v += s.numerator / (1.0 - s.load / f);
        }
        v
    }

    /// Infimum of the value as `f → ∞`.
    fn asymptote(&self) -> f64 {
        self.constant + self.server_term.map_or(0.0, |s| s.numerator)
    }

    /// Smallest `f` with `value(f) <= t`, or infinity if none.
    pub fn min_frequency(&self, t: f64) -> f64 {
        if t <= self.asymptote() {
            return f64::INFINITY;
        }
        match self.server_term {
            None => self.weight / (t - self.constant),
            Some(s) => {
                let mut lo = s.load;
                let mut hi = s.load.max(1.0) * 2.0;
                while self.value(hi) > t {
                    lo = hi;
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return f64::INFINITY;
                    }
                }
                for _ in 0..MAX_ITERATIONS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.value(mid) <= t {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }
}

/// Frequencies for the devices of one server and the resulting max value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerAllocation {
    pub frequencies: Vec<f64>,
    pub objective: f64,
}

/// Exact min-max split of `capacity` among `devices`.
///
/// `server` is only used to label errors.
pub fn allocate_server(devices: &[DeviceCost], capacity: f64, server: usize) -> Result<ServerAllocation, PlanError> {
    if devices.is_empty() {
        return Ok(ServerAllocation {
            frequencies: Vec::new(),
            objective: f64::NEG_INFINITY,
        });
    }
    let floor_sum: f64 = devices.iter().map(|d| d.floor).sum();
    let overload = || PlanError::ServerOverload {
        server,
        required: floor_sum,
        capacity,
    };
    if floor_sum > capacity {
        return Err(overload());
    }
    let need = |t: f64| -> f64 {
        devices
            .iter()
            .map(|d| d.min_frequency(t).max(d.floor))
            .sum()
    };
    // Even split of the headroom above the floors is feasible; its value
    // bounds the optimum from above.
    let share = (capacity - floor_sum) / devices.len() as f64;
    let mut hi = devices
        .iter()
        .map(|d| d.value(d.floor + share))
        .fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() {
        return Err(overload());
    }
    let mut lo = devices
        .iter()
        .map(|d| d.asymptote())
        .fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs() {
            break;
        }
        if need(mid) <= capacity {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut f: Vec<f64> = devices.iter().map(|d| d.min_frequency(hi).max(d.floor)).collect();
    // Hand leftover capacity to devices above their floor (or to all if none
    // are), scaling them up uniformly; values only drop.
    let used: f64 = f.iter().sum();
    let leftover = capacity - used;
    if leftover > 0.0 {
        let free: Vec<bool> = devices.iter().zip(&f).map(|(d, &fi)| fi > d.floor).collect();
        let any_free = free.iter().any(|&x| x);
        let base: f64 = f
            .iter()
            .zip(&free)
            .filter(|(_, &fr)| fr || !any_free)
            .map(|(fi, _)| fi)
            .sum();
        if base > 0.0 {
            let scale = 1.0 + leftover / base;
            for (fi, &fr) in f.iter_mut().zip(&free) {
                if fr || !any_free {
                    *fi *= scale;
                }
            }
        }
    }
    let objective = devices
        .iter()
        .zip(&f)
        .map(|(d, &fi)| d.value(fi))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ServerAllocation {
        frequencies: f,
        objective,
    })
}
