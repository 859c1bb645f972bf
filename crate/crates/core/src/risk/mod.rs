//! Value-at-Risk and Conditional Value-at-Risk.
//!
//! Conventions used throughout:
//!
//! * `VaR_α` is the α-quantile: the `⌈αK⌉`-th smallest of `K` samples.
//! * Empirical `CVaR_α` is the mean of the `⌈(1−α)K⌉` largest samples.
//! * The sample-average Rockafellar–Uryasev program
//!   `min_γ γ + 1/((1−α)K) Σ (x_k − γ)⁺` is solved exactly by sorting; it
//!   coincides with the empirical CVaR whenever `(1−α)K` is an integer.
//! * Exponential (heavy-traffic) waiting times with mean `m` have
//!   `VaR_α = −m·ln(1−α)` and `CVaR_α = m·(1 − ln(1−α))`.

pub mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("sample set is empty")]
    Empty,
    #[error("sample {index} is {value}; samples must be finite and nonnegative")]
    BadSample { index: usize, value: f64 },
    #[error("confidence level must lie in (0,1), got {0}")]
    Alpha(f64),
    #[error("{samples} samples are too few for a tail at alpha = {alpha}")]
    TooFewSamples { samples: usize, alpha: f64 },
    #[error("unstable queue: utilization {0} >= 1")]
    Unstable(f64),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("simplex failed: {0}")]
    Lp(#[from] simplex::LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulation,
    ChannelMonteCarlo,
}

/// Nonnegative, finite delay samples in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    provenance: Provenance,
}

impl SampleSet {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self, RiskError> {
        if values.is_empty() {
            return Err(RiskError::Empty);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(RiskError::BadSample { index, value });
        }
        Ok(SampleSet { values, provenance })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn check_alpha(alpha: f64) -> Result<(), RiskError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(RiskError::Alpha(alpha))
    }
}

/// `⌈x⌉` that ignores representation error just above an integer, so that
/// e.g. `(1 − 0.99)·100` counts as exactly 1.
fn ceil_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn quantile_index(k: usize, alpha: f64) -> usize {
    ceil_count(alpha * k as f64).clamp(1, k) - 1
}

fn tail_count(k: usize, alpha: f64) -> Result<usize, RiskError> {
    let tau = (1.0 - alpha) * k as f64;
    let n = ceil_count(tau);
    if n < 1 || tau < 1.0 - 1e-9 {
        return Err(RiskError::TooFewSamples { samples: k, alpha });
    }
    Ok(n.min(k))
}

fn var_sorted(sorted: &[f64], alpha: f64) -> f64 {
    sorted[quantile_index(sorted.len(), alpha)]
}

fn cvar_sorted(sorted: &[f64], alpha: f64) -> Result<f64, RiskError> {
    let n = tail_count(sorted.len(), alpha)?;
    let tail = &sorted[sorted.len() - n..];
    // Mean excess over the smallest tail sample keeps the result >= it.
    let floor = tail[0];
    Ok(floor + tail.iter().map(|x| x - floor).sum::<f64>() / n as f64)
}

/// Empirical α-quantile.
pub fn var_empirical(s: &SampleSet, alpha: f64) -> Result<f64, RiskError> {
    check_alpha(alpha)?;
    Ok(var_sorted(&s.sorted(), alpha))
}

/// Mean of the `⌈(1−α)K⌉` largest samples.
pub fn cvar_empirical(s: &SampleSet, alpha: f64) -> Result<f64, RiskError> {
    check_alpha(alpha)?;
    cvar_sorted(&s.sorted(), alpha)
}

/// Optimum of the sample-average CVaR program and a minimizing threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarSolution {
    /// Optimal value U, seconds.
    pub value: f64,
    /// Minimizing γ*, seconds.
    pub gamma: f64,
}

/// Solves `min_γ γ + 1/((1−α)K) Σ_k (x_k − γ)⁺` exactly.
///
/// The objective is piecewise linear and convex in γ with slope
/// `1 − #{x_k > γ}/((1−α)K)`, so the `⌈(1−α)K⌉`-th largest sample is a
/// minimizer.
pub fn cvar_lp(s: &SampleSet, alpha: f64) -> Result<CvarSolution, RiskError> {
    check_alpha(alpha)?;
    let sorted = s.sorted();
    let k = sorted.len();
    let n = tail_count(k, alpha)?;
    let tau = (1.0 - alpha) * k as f64;
    let gamma = sorted[k - n];
    let excess: f64 = sorted[k - n + 1..].iter().map(|x| x - gamma).sum();
    Ok(CvarSolution {
        value: gamma + excess / tau,
        gamma,
    })
}

/// Same program as [`cvar_lp`], solved as a generic LP with the dense
/// simplex. Variables `γ⁺, γ⁻, z_1..z_K, s_1..s_K` with
/// `z_k + γ⁺ − γ⁻ − s_k = x_k`.
pub fn cvar_lp_simplex(s: &SampleSet, alpha: f64) -> Result<CvarSolution, RiskError> {
    check_alpha(alpha)?;
    let k = s.len();
    tail_count(k, alpha)?;
    let scale = 1.0 / ((1.0 - alpha) * k as f64);
    let n = 2 + 2 * k;
    let mut c = vec![0.0; n];
    c[0] = 1.0;
    c[1] = -1.0;
    for z in &mut c[2..2 + k] {
        *z = scale;
    }
    let a: Vec<Vec<f64>> = (0..k)
        .map(|row| {
            let mut r = vec![0.0; n];
            r[0] = 1.0;
            r[1] = -1.0;
            r[2 + row] = 1.0;
            r[2 + k + row] = -1.0;
            r
        })
        .collect();
    let sol = simplex::minimize(&c, &a, s.values())?;
    Ok(CvarSolution {
        value: sol.objective,
        gamma: sol.x[0] - sol.x[1],
    })
}

fn exponential_mean_wait(lambda: f64, v: f64, rho: f64, alpha: f64) -> Result<f64, RiskError> {
    check_alpha(alpha)?;
    if rho >= 1.0 {
        return Err(RiskError::Unstable(rho));
    }
    if !(rho > 0.0) {
        return Err(RiskError::Parameter(format!("utilization must be positive, got {rho}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(RiskError::Parameter(format!("arrival rate must be positive, got {lambda}")));
    }
    if !(v >= 0.0 && v.is_finite()) {
        return Err(RiskError::Parameter(format!("variance must be nonnegative, got {v}")));
    }
    Ok(lambda * v / (2.0 * (1.0 - rho)))
}

/// CVaR of a heavy-traffic (exponential) waiting time with mean `λv/(2(1−ρ))`.
pub fn cvar_exponential_wait(lambda: f64, v: f64, rho: f64, alpha: f64) -> Result<f64, RiskError> {
    Ok(exponential_mean_wait(lambda, v, rho, alpha)? * (1.0 - (1.0 - alpha).ln()))
}

/// VaR of the same exponential waiting time.
pub fn var_exponential_wait(lambda: f64, v: f64, rho: f64, alpha: f64) -> Result<f64, RiskError> {
    Ok(exponential_mean_wait(lambda, v, rho, alpha)? * -(1.0 - alpha).ln())
}

/// `CVaR_α` of a multiplier on the mean of an exponential tail: `1 − ln(1−α)`.
pub fn exponential_cvar_multiplier(alpha: f64) -> f64 {
    1.0 - (1.0 - alpha).ln()
}

/// CVaR of a deterministic delay is the delay itself.
pub fn cvar_constant(c: f64) -> f64 {
    debug_assert!(c >= 0.0);
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub mean: f64,
    pub var_alpha: f64,
    pub cvar_alpha: f64,
    pub p99: f64,
    pub alpha: f64,
    pub count: usize,
}

impl RiskSummary {
    pub fn from_samples(s: &SampleSet, alpha: f64) -> Result<Self, RiskError> {
        check_alpha(alpha)?;
        let sorted = s.sorted();
        Ok(RiskSummary {
            mean: s.mean(),
            var_alpha: var_sorted(&sorted, alpha),
            cvar_alpha: cvar_sorted(&sorted, alpha)?,
            p99: var_sorted(&sorted, 0.99),
            alpha,
            count: sorted.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: Vec<f64>) -> SampleSet {
        SampleSet::new(v, Provenance::Simulation).unwrap()
    }

    fn one_to_hundred() -> SampleSet {
        set((1..=100).map(f64::from).collect())
    }

    /// Sort-and-index oracle written against the definitions directly.
    fn oracle_var(v: &[f64], alpha: f64) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let idx = (1..=s.len()).find(|&i| i as f64 >= alpha * s.len() as f64 - 1e-9).unwrap();
        s[idx - 1]
    }

    fn oracle_cvar(v: &[f64], alpha: f64) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        let n = (1..=s.len())
            .find(|&i| i as f64 >= (1.0 - alpha) * s.len() as f64 - 1e-9)
            .unwrap();
        s[..n].iter().sum::<f64>() / n as f64
    }

    #[test]
    fn var_examples() {
        assert_eq!(var_empirical(&one_to_hundred(), 0.95).unwrap(), 95.0);
        assert_eq!(var_empirical(&one_to_hundred(), 0.5).unwrap(), 50.0);
        assert_eq!(var_empirical(&set(vec![3.5; 17]), 0.73).unwrap(), 3.5);
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(oracle_var(&v, 0.95), 95.0);
    }

    #[test]
    fn cvar_examples() {
        assert_eq!(cvar_empirical(&one_to_hundred(), 0.95).unwrap(), 98.0);
        assert_eq!(cvar_empirical(&set(vec![2.0; 50]), 0.9).unwrap(), 2.0);
        let s = one_to_hundred();
        assert!((cvar_empirical(&s, 1e-12).unwrap() - s.mean()).abs() < 1e-12);
    }

    #[test]
    fn alpha_and_size_errors() {
        assert_eq!(var_empirical(&one_to_hundred(), 1.0), Err(RiskError::Alpha(1.0)));
        assert_eq!(cvar_empirical(&one_to_hundred(), 0.0), Err(RiskError::Alpha(0.0)));
        assert!(matches!(
            cvar_empirical(&set(vec![1.0; 50]), 0.99),
            Err(RiskError::TooFewSamples { .. })
        ));
        assert_eq!(SampleSet::new(vec![], Provenance::Simulation), Err(RiskError::Empty));
        assert!(matches!(
            SampleSet::new(vec![1.0, f64::NAN], Provenance::Simulation),
            Err(RiskError::BadSample { index: 1, .. })
        ));
        assert!(SampleSet::new(vec![-1.0], Provenance::Simulation).is_err());
    }

    #[test]
    fn lp_examples() {
        let c = cvar_lp(&set(vec![4.0; 10]), 0.5).unwrap();
        assert_eq!((c.value, c.gamma), (4.0, 4.0));
        let two = cvar_lp(&set(vec![0.0, 10.0]), 0.5).unwrap();
        assert_eq!((two.value, two.gamma), (10.0, 10.0));
        // Objective on the 2-sample problem is flat at 10 for γ in [0,10].
        for g in [0.0, 2.5, 10.0] {
            let obj = g + ((10.0f64 - g).max(0.0) + (0.0f64 - g).max(0.0)) / 1.0;
            assert_eq!(obj, 10.0);
        }
        let s = one_to_hundred();
        assert_eq!(cvar_lp(&s, 0.95).unwrap().value, 98.0);
    }

    #[test]
    fn lp_fractional_tail_is_the_true_optimum() {
        // K = 3, α = 0.5: τ = 1.5; objective minimized over γ by brute force.
        let v = vec![1.0, 4.0, 10.0];
        let lp = cvar_lp(&set(v.clone()), 0.5).unwrap();
        let brute = (0..=10_000)
            .map(|i| {
                let g = i as f64 * 1e-3;
                g + v.iter().map(|x| (x - g).max(0.0)).sum::<f64>() / 1.5
            })
            .fold(f64::INFINITY, f64::min);
        assert!((lp.value - brute).abs() < 1e-9);
    }

    #[test]
    fn simplex_agrees_with_closed_form() {
        let s = set(vec![0.3, 1.7, 0.2, 5.0, 2.2, 0.9, 3.3, 0.0, 4.1, 1.1]);
        for alpha in [0.5, 0.7, 0.8, 0.9] {
            let a = cvar_lp(&s, alpha).unwrap();
            let b = cvar_lp_simplex(&s, alpha).unwrap();
            assert!((a.value - b.value).abs() < 1e-9, "{alpha}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn exponential_examples() {
        let m = exponential_cvar_multiplier(0.99);
        assert!((m - 5.605170185988091).abs() < 1e-12);
        let c = cvar_exponential_wait(10.0, 0.01, 0.5, 0.99).unwrap();
        assert!((c - 0.5605170185988091).abs() < 1e-12);
        let v = var_exponential_wait(10.0, 0.01, 0.5, 0.99).unwrap();
        assert!((v - 0.4605170185988091).abs() < 1e-12);
        assert!((c - v - 0.1).abs() < 1e-12);
        let tiny = cvar_exponential_wait(10.0, 0.01, 0.5, 1e-12).unwrap();
        assert!((tiny - 0.1).abs() < 1e-10);
        assert!(var_exponential_wait(10.0, 0.01, 0.5, 1e-12).unwrap() < 1e-12);
        assert_eq!(cvar_exponential_wait(10.0, 0.0, 0.5, 0.99).unwrap(), 0.0);
        assert_eq!(cvar_exponential_wait(10.0, 0.01, 1.0, 0.99), Err(RiskError::Unstable(1.0)));
    }

    #[test]
    fn constant_cvar() {
        let c = 7.5e6 / 1e9;
        assert_eq!(cvar_constant(c), c);
        assert_eq!(cvar_constant(0.0), 0.0);
        let s = set(vec![0.0075; 200]);
        for a in [0.1, 0.5, 0.99] {
            assert_eq!(cvar_empirical(&s, a).unwrap(), 0.0075);
        }
    }

    #[test]
    fn summary_orders_tail_statistics() {
        let s = set((0..1000).map(|i| ((i * 7919) % 1000) as f64 * 0.01).collect());
        let r = RiskSummary::from_samples(&s, 0.99).unwrap();
        assert!(r.cvar_alpha >= r.var_alpha && r.var_alpha >= 0.0);
        assert!(r.cvar_alpha >= r.mean);
        assert_eq!(r.p99, r.var_alpha);
    }

    proptest! {
        #[test]
        fn estimators_match_oracles(
            v in prop::collection::vec(0.0f64..100.0, 20..300),
            alpha in 0.05f64..0.95,
        ) {
            let s = set(v.clone());
            prop_assert_eq!(var_empirical(&s, alpha).unwrap(), oracle_var(&v, alpha));
            if (1.0 - alpha) * v.len() as f64 >= 1.0 {
                let c = cvar_empirical(&s, alpha).unwrap();
                prop_assert!((c - oracle_cvar(&v, alpha)).abs() <= 1e-9 * c.max(1.0));
            }
        }

        #[test]
        fn closed_form_lp_matches_simplex(
            v in prop::collection::vec(0.0f64..10.0, 10..40),
            alpha in prop::sample::select(vec![0.5, 0.75, 0.9]),
        ) {
            prop_assume!((1.0 - alpha) * v.len() as f64 >= 1.0);
            let s = set(v);
            let a = cvar_lp(&s, alpha).unwrap();
            let b = cvar_lp_simplex(&s, alpha).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-8 * a.value.max(1.0));
        }

        #[test]
        fn lp_equals_empirical_on_integer_tails(
            v in prop::collection::vec(0.0f64..10.0, 1..50),
            alpha in prop::sample::select(vec![0.9, 0.95, 0.99]),
        ) {
            // Replicate to K = 100·len so (1−α)K is integral for all three levels.
            let k: Vec<f64> = v.iter().cycle().take(100 * v.len()).copied().collect();
            let s = set(k);
            let lp = cvar_lp(&s, alpha).unwrap().value;
            let emp = cvar_empirical(&s, alpha).unwrap();
            prop_assert!((lp - emp).abs() <= 1e-9 * emp.max(1e-300));
        }
    }
}
