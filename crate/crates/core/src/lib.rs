//! Risk-aware task offloading for multi-server edge computing.
//!
//! Devices generate tasks as Poisson streams, queue them for transmission over
//! fading wireless links, and offload each to one multi-core server where a
//! dedicated core of tunable frequency processes it. The crate provides:
//!
//! - [`scenario`]: the system description, validation and a seeded generator;
//! - [`channel`]: fading models and transmission-time statistics;
//! - [`risk`]: VaR/CVaR estimators, including the linear-programming form;
//! - [`queueing`]: mean and CVaR delay bounds for the device and server queues;
//! - [`planner`]: the two-stage heuristic and exhaustive search;
//! - [`simulator`]: an event-driven simulator for validating plans;
//! - [`experiment`]: parameter sweeps and strategy comparisons.
//!
//! Work that fans out over links, assignments or replications goes through
//! [`par::Execution`], which runs on rayon when the `parallel` feature is on.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod experiment;
pub mod par;
pub mod planner;
pub mod queueing;
pub mod risk;
pub mod scenario;
pub mod seed;
pub mod simulator;

pub use par::Execution;
pub use planner::{Plan, PlanError, Planner, StrategyKind};
pub use queueing::{AnalysisOptions, DelayBound};
pub use scenario::{generate_scenario, load_scenario, Scenario, ScenarioError};
