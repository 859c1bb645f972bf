//! Event-driven simulation of the device and server queues.
//!
//! Each device has a Poisson task stream, a FIFO transmit queue whose tasks
//! each see a fresh channel draw, and a dedicated FIFO core at its server with
//! deterministic service `c/f`. All devices share one event clock, but every
//! device draws from its own streams (keyed by device id), so reordering the
//! device list does not change any device's trace.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{self, ChannelError};
use crate::planner::Plan;
use crate::queueing::Components;
use crate::risk::{Provenance, RiskError, RiskSummary, SampleSet};
use crate::scenario::Scenario;
use crate::seed::{self, StreamRng};

/// Waiting tasks at which a device queue is declared runaway; its arrivals
/// stop so the run still finishes.
pub const QUEUE_CAP: usize = 1_000_000;

/// Fraction of the horizon discarded as warmup unless stated otherwise.
pub const DEFAULT_WARMUP_FRACTION: f64 = 0.1;

pub fn default_warmup(horizon: f64) -> f64 {
    DEFAULT_WARMUP_FRACTION * horizon
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    Parameter(String),
    #[error("plan does not fit the scenario: {0}")]
    Plan(String),
    #[error("device {device}: {source}")]
    Channel { device: usize, source: ChannelError },
    #[error("device {device} has {have} post-warmup tasks, need at least {need}")]
    InsufficientSamples { device: usize, have: usize, need: usize },
    #[error("no samples to summarize")]
    Empty,
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// One completed task. `total` is the exact sum of the four parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub device: usize,
    pub arrival: f64,
    pub device_wait: f64,
    pub tx: f64,
    pub server_wait: f64,
    pub compute: f64,
    pub total: f64,
}

impl TaskRecord {
    pub fn components(&self) -> Components {
        Components {
            device_wait: self.device_wait,
            tx: self.tx,
            server_wait: self.server_wait,
            compute: self.compute,
        }
    }
}

/// Post-warmup trace of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTrace {
    pub device: usize,
    pub server: usize,
    /// Tasks arriving in `[warmup, horizon]`, by arrival time.
    pub records: Vec<TaskRecord>,
    pub warmup_discarded: usize,
    /// Transmissions completed inside `[warmup, horizon]`.
    pub departures: u64,
    /// Time-averaged number of tasks waiting (not in transmission) over
    /// `[warmup, horizon]`.
    pub mean_queue_length: f64,
    pub max_queue_length: usize,
    /// The device queue hit [`QUEUE_CAP`].
    pub overflowed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub devices: Vec<DeviceTrace>,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
}

impl SimResult {
    pub fn span(&self) -> f64 {
        self.horizon - self.warmup
    }

    pub fn warmup_discarded(&self) -> usize {
        self.devices.iter().map(|d| d.warmup_discarded).sum()
    }

    pub fn any_overflow(&self) -> bool {
        self.devices.iter().any(|d| d.overflowed)
    }

    /// Every post-warmup record, ordered by arrival time then device.
    pub fn records(&self) -> Vec<TaskRecord> {
        let mut all: Vec<TaskRecord> = self.devices.iter().flat_map(|d| d.records.iter().copied()).collect();
        all.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.device.cmp(&b.device)));
        all
    }

    pub fn totals(&self, target: Target) -> Vec<f64> {
        match target {
            Target::Device(i) => self.devices.get(i).map_or_else(Vec::new, |d| {
                d.records.iter().map(|r| r.total).collect()
            }),
            Target::Aggregate => self
                .devices
                .iter()
                .flat_map(|d| d.records.iter().map(|r| r.total))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Arrival,
    TxDone,
    ComputeDone,
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    device: usize,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Task {
    arrival: f64,
    tx_start: f64,
    tx: f64,
    compute_start: f64,
}

struct DeviceState {
    rate: f64,
    compute: f64,
    arrivals: StreamRng,
    channel: StreamRng,
    tasks: Vec<Task>,
    queue: VecDeque<usize>,
    in_tx: Option<usize>,
    core_queue: VecDeque<usize>,
    in_core: Option<usize>,
    area: f64,
    last_change: f64,
    departures: u64,
    max_queue: usize,
    overflowed: bool,
}

impl DeviceState {
    /// Adds the waiting-queue area up to `t`, clipped to the window.
    fn account(&mut self, t: f64, warmup: f64, horizon: f64) {
        let lo = self.last_change.max(warmup);
        let hi = t.min(horizon);
        if hi > lo {
            self.area += self.queue.len() as f64 * (hi - lo);
        }
        self.last_change = t;
    }
}

struct Clock {
    heap: BinaryHeap<Event>,
    seq: u64,
}

impl Clock {
    fn schedule(&mut self, time: f64, device: usize, kind: Kind) {
        self.heap.push(Event {
            time,
            seq: self.seq,
            device,
            kind,
        });
        self.seq += 1;
    }
}

fn exp_interval(rng: &mut StreamRng, rate: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Runs the plan on the scenario from time 0 to `horizon`; tasks arriving
/// after `horizon` are not generated, and those already in the system are
/// drained. Statistics use tasks arriving in `[warmup, horizon]`.
pub fn run(scenario: &Scenario, plan: &Plan, horizon: f64, warmup: f64, seed: u64) -> Result<SimResult, SimError> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimError::Parameter(format!("horizon must be positive, got {horizon}")));
    }
    if !(warmup >= 0.0 && warmup < horizon) {
        return Err(SimError::Parameter(format!(
            "warmup must lie in [0, horizon), got {warmup} with horizon {horizon}"
        )));
    }
    let m = scenario.num_devices();
    if plan.offloads.len() != m {
        return Err(SimError::Plan(format!("{} offloads for {m} devices", plan.offloads.len())));
    }
    for o in &plan.offloads {
        if o.server >= scenario.num_servers() || !(o.frequency_hz > 0.0) {
            return Err(SimError::Plan(format!(
                "device {} has server {} at {} Hz",
                o.device, o.server, o.frequency_hz
            )));
        }
    }

    let mut clock = Clock {
        heap: BinaryHeap::new(),
        seq: 0,
    };
    let mut states: Vec<DeviceState> = scenario
        .devices
        .iter()
        .zip(&plan.offloads)
        .map(|(d, o)| DeviceState {
            rate: d.arrival_rate,
            compute: d.task_cycles() / o.frequency_hz,
            arrivals: seed::stream(seed, &[seed::tag::SIM_ARRIVALS, d.id as u64]),
            channel: seed::stream(seed, &[seed::tag::SIM_CHANNEL, d.id as u64]),
            tasks: Vec::new(),
            queue: VecDeque::new(),
            in_tx: None,
            core_queue: VecDeque::new(),
            in_core: None,
            area: 0.0,
            last_change: 0.0,
            departures: 0,
            max_queue: 0,
            overflowed: false,
        })
        .collect();
    for (i, st) in states.iter_mut().enumerate() {
        let t = exp_interval(&mut st.arrivals, st.rate);
        if t <= horizon {
            clock.schedule(t, i, Kind::Arrival);
        }
    }

    while let Some(ev) = clock.heap.pop() {
        let i = ev.device;
        let o = plan.offloads[i];
        let st = &mut states[i];
        let t = ev.time;
        match ev.kind {
            Kind::Arrival => {
                let k = st.tasks.len();
                st.tasks.push(Task {
                    arrival: t,
                    ..Task::default()
                });
                if st.in_tx.is_none() {
                    start_tx(st, k, t, &mut clock, i, scenario, o.server)?;
                } else {
                    st.account(t, warmup, horizon);
                    st.queue.push_back(k);
                    st.max_queue = st.max_queue.max(st.queue.len());
                    if st.queue.len() >= QUEUE_CAP {
                        st.overflowed = true;
                    }
                }
                if !st.overflowed {
                    let next = t + exp_interval(&mut st.arrivals, st.rate);
                    if next <= horizon {
                        clock.schedule(next, i, Kind::Arrival);
                    }
                }
            }
            Kind::TxDone => {
                let k = st.in_tx.take().expect("transmitter busy");
                if t >= warmup && t <= horizon {
                    st.departures += 1;
                }
                if st.in_core.is_none() {
                    st.tasks[k].compute_start = t;
                    st.in_core = Some(k);
                    clock.schedule(t + st.compute, i, Kind::ComputeDone);
                } else {
                    st.core_queue.push_back(k);
                }
                if !st.queue.is_empty() {
                    st.account(t, warmup, horizon);
                    let next = st.queue.pop_front().expect("nonempty");
                    start_tx(st, next, t, &mut clock, i, scenario, o.server)?;
                }
            }
            Kind::ComputeDone => {
                st.in_core = None;
                if let Some(k) = st.core_queue.pop_front() {
                    st.tasks[k].compute_start = t;
                    st.in_core = Some(k);
                    clock.schedule(t + st.compute, i, Kind::ComputeDone);
                }
            }
        }
    }

    let span = horizon - warmup;
    let devices = states
        .into_iter()
        .enumerate()
        .map(|(i, mut st)| {
            st.account(horizon, warmup, horizon);
            let compute = st.compute;
            let mut warmup_discarded = 0;
            let records = st
                .tasks
                .iter()
                .filter(|task| {
                    let keep = task.arrival >= warmup;
                    warmup_discarded += usize::from(!keep);
                    keep
                })
                .map(|task| {
                    let device_wait = task.tx_start - task.arrival;
                    let server_wait = task.compute_start - (task.tx_start + task.tx);
                    TaskRecord {
                        device: i,
                        arrival: task.arrival,
                        device_wait,
                        tx: task.tx,
                        server_wait,
                        compute,
                        total: device_wait + task.tx + server_wait + compute,
                    }
                })
                .collect();
            DeviceTrace {
                device: i,
                server: plan.offloads[i].server,
                records,
                warmup_discarded,
                departures: st.departures,
                mean_queue_length: st.area / span,
                max_queue_length: st.max_queue,
                overflowed: st.overflowed,
            }
        })
        .collect();
    Ok(SimResult {
        devices,
        horizon,
        warmup,
        seed,
    })
}

fn start_tx(
    st: &mut DeviceState,
    k: usize,
    t: f64,
    clock: &mut Clock,
    device: usize,
    scenario: &Scenario,
    server: usize,
) -> Result<(), SimError> {
    let (tx, _) = channel::sample_tx_time(
        &scenario.devices[device],
        scenario.channel(device, server),
        &mut st.channel,
    )
    .map_err(|source| SimError::Channel { device, source })?;
    st.tasks[k].tx_start = t;
    st.tasks[k].tx = tx;
    st.in_tx = Some(k);
    clock.schedule(t + tx, device, Kind::TxDone);
    Ok(())
}

/// Empirical summary of one device's post-warmup tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceStatistics {
    pub device: usize,
    pub summary: RiskSummary,
    /// Per-component sample means.
    pub mean: Components,
}

fn min_samples(alpha: f64) -> usize {
    (10.0 / (1.0 - alpha)).ceil() as usize
}

fn summarize(totals: Vec<f64>, alpha: f64) -> Result<RiskSummary, SimError> {
    let set = SampleSet::new(totals, Provenance::Simulation)?;
    Ok(RiskSummary::from_samples(&set, alpha)?)
}

/// Mean, VaR, CVaR and component means per device. Needs at least
/// `10/(1−α)` post-warmup tasks on every device.
pub fn statistics(result: &SimResult, alpha: f64) -> Result<Vec<DeviceStatistics>, SimError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(RiskError::Alpha(alpha).into());
    }
    let need = min_samples(alpha);
    result
        .devices
        .iter()
        .map(|d| {
            let n = d.records.len();
            if n < need {
                return Err(SimError::InsufficientSamples {
                    device: d.device,
                    have: n,
                    need,
                });
            }
            let mut mean = Components::default();
            for r in &d.records {
                mean.device_wait += r.device_wait;
                mean.tx += r.tx;
                mean.server_wait += r.server_wait;
                mean.compute += r.compute;
            }
            let k = n as f64;
            mean.device_wait /= k;
            mean.tx /= k;
            mean.server_wait /= k;
            mean.compute /= k;
            Ok(DeviceStatistics {
                device: d.device,
                summary: summarize(d.records.iter().map(|r| r.total).collect(), alpha)?,
                mean,
            })
        })
        .collect()
}

/// Summary over the pooled tasks of all devices.
pub fn aggregate_statistics(result: &SimResult, alpha: f64) -> Result<RiskSummary, SimError> {
    let totals = result.totals(Target::Aggregate);
    let need = min_samples(alpha);
    if totals.len() < need {
        return Err(SimError::InsufficientSamples {
            device: usize::MAX,
            have: totals.len(),
            need,
        });
    }
    summarize(totals, alpha)
}

/// Which tasks a CCDF covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    Device(usize),
    Aggregate,
}

/// Empirical `P(total > w)` at each grid point.
pub fn ccdf(result: &SimResult, target: Target, grid: &[f64]) -> Result<Vec<f64>, SimError> {
    let mut totals = result.totals(target);
    if totals.is_empty() {
        return Err(SimError::Empty);
    }
    totals.sort_by(f64::total_cmp);
    Ok(ccdf_sorted(&totals, grid))
}

/// CCDF of already-sorted samples.
pub fn ccdf_sorted(sorted: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = sorted.len() as f64;
    grid.iter()
        .map(|&w| (sorted.len() - sorted.partition_point(|&x| x <= w)) as f64 / n)
        .collect()
}
