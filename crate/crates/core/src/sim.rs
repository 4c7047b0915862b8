//! Discrete-event simulation of entanglement-request servicing.
//!
//! Each request asks for a Bell pair between two communication ions. A
//! messenger atom is assigned (nearest idle, ties to the lowest id), moves
//! to the first ion, runs the entangling gate, moves to the second ion, runs
//! the second gate, and the delivery completes after the measurement and
//! classical correction. Messengers return to their parking spot only when
//! the backlog is empty; a returning messenger finishes the return before it
//! can take new work.
//!
//! Time is integer nanoseconds and every tie is broken by a fixed ordering,
//! so a (config, seed) pair always produces the identical event log. The
//! fidelity attached to a delivered pair is the exact density-matrix result
//! for the configured per-gate error, computed once per run.

use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{collisional_budget, CollisionalGateSpec, RydbergGateSpec};
use crate::quantum::{depolarizing_p_for_gate_fidelity, protocol_pair_fidelity};
use crate::topology::{ChainSpec, ChipLayout, Endpoint};
use crate::tweezer::{plan_transport, ProfileKind, TransportConstraint};

/// Simulation timestamps, integer nanoseconds.
pub type Nanos = u64;

fn to_ns(seconds: f64) -> Nanos {
    (seconds * 1e9).round() as Nanos
}

/// What happened at one point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    RequestArrival,
    TransportStart,
    TransportEnd,
    GateStart,
    GateEnd,
    MeasureEnd,
    PairDelivered,
    RequestRejected,
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(out, "{self:?}")
    }
}

/// One log entry.
#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub time_ns: Nanos,
    pub kind: EventKind,
    pub request: Option<u64>,
    pub messenger: Option<usize>,
    pub detail: String,
}

/// One sampled messenger position for the position-vs-time trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TracePoint {
    pub time_ns: Nanos,
    pub messenger: usize,
    pub x: f64,
    pub y: f64,
}

/// Where the simulated chip comes from: pack parameters or a full layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSource {
    Pack {
        fov_diameter: f64,
        zone_pitch: f64,
        chain: ChainSpec,
    },
    Explicit(ChipLayout),
}

impl LayoutSource {
    pub fn resolve(&self) -> Result<ChipLayout> {
        match self {
            LayoutSource::Pack {
                fov_diameter,
                zone_pitch,
                chain,
            } => crate::topology::pack_zones(*fov_diameter, *zone_pitch, *chain),
            LayoutSource::Explicit(layout) => {
                layout.validate()?;
                Ok(layout.clone())
            }
        }
    }
}

/// Which entangling gate the interconnect uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Collisional,
    Rydberg,
}

/// Gate section of the config. The kind selects which spec applies; a
/// missing spec means defaults. `fidelity` overrides the modeled gate
/// fidelity (mandatory knowledge gap for Rydberg, which defaults to ideal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateConfig {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collisional: Option<CollisionalGateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rydberg: Option<RydbergGateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

impl GateConfig {
    pub fn gate_time(&self) -> f64 {
        match self.kind {
            GateKind::Collisional => self.collisional.unwrap_or_default().t_gate,
            GateKind::Rydberg => self.rydberg.unwrap_or_default().t_gate,
        }
    }

    fn gate_phase(&self) -> f64 {
        match self.kind {
            GateKind::Collisional => self.collisional.unwrap_or_default().phase,
            GateKind::Rydberg => std::f64::consts::PI,
        }
    }

    /// Effective per-gate fidelity: the override when present, otherwise the
    /// collisional loss budget, otherwise ideal.
    pub fn gate_fidelity(&self) -> Result<f64> {
        if let Some(f) = self.fidelity {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::config("gate fidelity must be in (0, 1]"));
            }
            return Ok(f);
        }
        match self.kind {
            GateKind::Collisional => {
                Ok(collisional_budget(&self.collisional.unwrap_or_default())?.effective_fidelity)
            }
            GateKind::Rydberg => Ok(1.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(spec) = &self.collisional {
            spec.validate()?;
        }
        if let Some(spec) = &self.rydberg {
            spec.validate()?;
        }
        self.gate_fidelity()?;
        if !(self.gate_time() > 0.0) || !self.gate_time().is_finite() {
            return Err(Error::config("gate time must be > 0"));
        }
        Ok(())
    }
}

/// Transport section of the config.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransportConfig {
    /// Acceleration bound handed to the planner, m/s².
    pub a_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_limit: Option<f64>,
    #[serde(default = "default_profile")]
    pub profile_kind: ProfileKind,
    /// Extra settle time added to every leg, s.
    #[serde(default)]
    pub extra_settle_time: f64,
}

fn default_profile() -> ProfileKind {
    ProfileKind::BangBang
}

/// A messenger's initial parking position.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessengerStart {
    /// One of the layout's idle slots.
    Idle { idle: usize },
    /// An explicit coordinate, m.
    At { at: (f64, f64) },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MessengerConfig {
    pub id: usize,
    pub start: MessengerStart,
}

/// Workload shape.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestModel {
    /// `count` requests, all submitted at t = 0.
    Closed { count: u64 },
    /// Poisson arrivals at `rate` per second until the duration limit.
    Open { rate: f64 },
}

/// Endpoint pair of one request.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RequestEndpoints {
    pub from: Endpoint,
    pub to: Endpoint,
}

/// How request endpoints are chosen.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointModel {
    /// Requests cycle through this list in order.
    Cycle(Vec<RequestEndpoints>),
    /// Each request picks two distinct zones uniformly at random and
    /// connects the first zone's right edge ion to the second's left.
    RandomPairs,
}

impl Default for EndpointModel {
    fn default() -> Self {
        EndpointModel::RandomPairs
    }
}

/// Full simulation configuration. JSON-serializable; see the repository
/// `configs/` directory for examples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub layout: LayoutSource,
    pub gate: GateConfig,
    pub transport: TransportConfig,
    pub messengers: Vec<MessengerConfig>,
    pub requests: RequestModel,
    #[serde(default)]
    pub endpoints: EndpointModel,
    #[serde(default)]
    pub seed: u64,
    /// Hard stop for the run, s. Mandatory for open workloads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_limit: Option<f64>,
    /// Measurement plus feed-forward time after the second gate, s.
    #[serde(default)]
    pub measure_time: f64,
    /// Tweezer power ramp overhead added to every gate, s.
    #[serde(default)]
    pub ramp_overhead: f64,
    /// Backlog bound; requests arriving beyond it are rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_capacity: Option<usize>,
    /// Trace resolution per transport leg.
    #[serde(default = "default_trace_samples")]
    pub trace_samples_per_leg: usize,
}

fn default_trace_samples() -> usize {
    20
}

impl SimConfig {
    pub fn from_json(json: &str) -> Result<SimConfig> {
        let config: SimConfig = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Validate the whole document, including endpoint reachability.
    pub fn validate(&self) -> Result<()> {
        let layout = self.layout.resolve()?;
        self.gate.validate()?;

        if !(self.transport.a_limit > 0.0) || !self.transport.a_limit.is_finite() {
            return Err(Error::config("transport.a_limit must be > 0"));
        }
        if let Some(v) = self.transport.v_limit {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config("transport.v_limit must be > 0 when given"));
            }
        }
        if !(self.transport.extra_settle_time >= 0.0)
            || !self.transport.extra_settle_time.is_finite()
        {
            return Err(Error::config("transport.extra_settle_time must be >= 0"));
        }
        if !(self.measure_time >= 0.0) || !self.measure_time.is_finite() {
            return Err(Error::config("measure_time must be >= 0"));
        }
        if !(self.ramp_overhead >= 0.0) || !self.ramp_overhead.is_finite() {
            return Err(Error::config("ramp_overhead must be >= 0"));
        }

        if self.messengers.is_empty() {
            return Err(Error::config("at least one messenger is required"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for m in &self.messengers {
            if !ids.insert(m.id) {
                return Err(Error::config(format!("duplicate messenger id {}", m.id)));
            }
            match m.start {
                MessengerStart::Idle { idle } => {
                    if idle >= layout.idle_positions.len() {
                        return Err(Error::config(format!(
                            "messenger {}: idle position {idle} does not exist",
                            m.id
                        )));
                    }
                }
                MessengerStart::At { at: (x, y) } => {
                    if !x.is_finite() || !y.is_finite() {
                        return Err(Error::config(format!(
                            "messenger {}: non-finite start position",
                            m.id
                        )));
                    }
                }
            }
        }

        match self.requests {
            RequestModel::Closed { .. } => {}
            RequestModel::Open { rate } => {
                if !(rate > 0.0) || !rate.is_finite() {
                    return Err(Error::config("open workload rate must be > 0"));
                }
                if self.duration_limit.is_none() {
                    return Err(Error::config("open workloads need a duration_limit"));
                }
            }
        }
        if let Some(limit) = self.duration_limit {
            if !(limit > 0.0) || !limit.is_finite() {
                return Err(Error::config("duration_limit must be > 0"));
            }
        }

        match &self.endpoints {
            EndpointModel::Cycle(cycle) => {
                if cycle.is_empty() {
                    return Err(Error::config("endpoint cycle must not be empty"));
                }
                for (i, pair) in cycle.iter().enumerate() {
                    for endpoint in [pair.from, pair.to] {
                        match endpoint {
                            Endpoint::Ion { .. } => {
                                layout.position(endpoint).map_err(|e| {
                                    Error::config(format!("endpoint cycle entry {i}: {e}"))
                                })?;
                            }
                            Endpoint::Idle { .. } => {
                                return Err(Error::config(format!(
                                    "endpoint cycle entry {i}: requests must target ions"
                                )))
                            }
                        }
                    }
                    if pair.from == pair.to {
                        return Err(Error::config(format!(
                            "endpoint cycle entry {i}: endpoints must differ"
                        )));
                    }
                }
            }
            EndpointModel::RandomPairs => {
                if layout.zone_count() < 2 {
                    return Err(Error::config(
                        "random endpoint pairs need at least two zones",
                    ));
                }
            }
        }
        if self.trace_samples_per_leg == 0 || self.trace_samples_per_leg > 100_000 {
            return Err(Error::config("trace_samples_per_leg must be in 1..=100000"));
        }
        Ok(())
    }
}

/// Aggregate results of a run. The event log and traces export separately
/// as CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub submitted: u64,
    pub delivered_pairs: u64,
    pub rejected: u64,
    pub queued_at_end: u64,
    pub in_flight_at_end: u64,
    /// Simulated time the run covers, s.
    pub elapsed: f64,
    /// delivered_pairs / elapsed, pairs/s.
    pub throughput: f64,
    pub mean_latency: f64,
    pub p95_latency: f64,
    /// Busy fraction per messenger, in config order.
    pub messenger_utilization: Vec<f64>,
    pub mean_pair_fidelity: f64,
    #[serde(skip)]
    pub event_log: Vec<Event>,
    #[serde(skip)]
    pub traces: Vec<TracePoint>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    /// CSV export of the event log: `time_ns,kind,request,messenger,detail`.
    pub fn event_log_csv(&self) -> String {
        let mut out = String::from("time_ns,kind,request,messenger,detail\n");
        for e in &self.event_log {
            let request = e.request.map(|r| r.to_string()).unwrap_or_default();
            let messenger = e.messenger.map(|m| m.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.time_ns, e.kind, request, messenger, e.detail
            ));
        }
        out
    }

    /// CSV export of the position traces: `time_ns,messenger,x,y`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("time_ns,messenger,x,y\n");
        for p in &self.traces {
            out.push_str(&format!("{},{},{},{}\n", p.time_ns, p.messenger, p.x, p.y));
        }
        out
    }
}

/// Closed-form saturated rate: one pair per `2·t_gate + t_transport +
/// overheads`.
pub fn analytic_rate(t_gate: f64, t_transport: f64, overheads: f64) -> Result<f64> {
    for (name, v) in [
        ("t_gate", t_gate),
        ("t_transport", t_transport),
        ("overheads", overheads),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::argument(format!("{name} must be >= 0")));
        }
    }
    let cycle = 2.0 * t_gate + t_transport + overheads;
    if cycle <= 0.0 {
        return Err(Error::argument("cycle time must be > 0"));
    }
    Ok(1.0 / cycle)
}

/// Messenger assignment policy.
pub trait AssignPolicy {
    /// Choose one of `idle` (id, position) for a request whose first
    /// endpoint sits at `target`. `idle` is ordered by ascending id.
    fn assign(&self, idle: &[(usize, (f64, f64))], target: (f64, f64)) -> usize;
}

/// Default policy: nearest idle messenger, ties to the lowest id.
pub struct NearestIdle;

impl AssignPolicy for NearestIdle {
    fn assign(&self, idle: &[(usize, (f64, f64))], target: (f64, f64)) -> usize {
        let mut best = idle[0];
        let mut best_d2 = f64::INFINITY;
        for &(id, (x, y)) in idle {
            let d2 = (x - target.0).powi(2) + (y - target.1).powi(2);
            if d2 < best_d2 {
                best = (id, (x, y));
                best_d2 = d2;
            }
        }
        best.0
    }
}

// ---------------------------------------------------------------------
// engine internals
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Arrival { request: u64 },
    TransportDone { messenger: usize },
    GateDone { messenger: usize },
    MeasureDone { messenger: usize },
    ReturnDone { messenger: usize },
}

impl Step {
    fn rank(&self) -> u8 {
        match self {
            Step::Arrival { .. } => 0,
            Step::TransportDone { .. } => 1,
            Step::GateDone { .. } => 2,
            Step::MeasureDone { .. } => 3,
            Step::ReturnDone { .. } => 4,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Scheduled {
    time: Nanos,
    rank: u8,
    request: u64,
    seq: u64,
    step: Step,
}

impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first
        (other.time, other.rank, other.request, other.seq).cmp(&(
            self.time,
            self.rank,
            self.request,
            self.seq,
        ))
    }
}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskPhase {
    ToFirst,
    Gate1,
    ToSecond,
    Gate2,
    Measure,
}

#[derive(Debug, Clone, Copy)]
struct Task {
    request: u64,
    from: Endpoint,
    to: Endpoint,
    phase: TaskPhase,
    arrival: Nanos,
    service_start: Nanos,
}

#[derive(Debug, Clone)]
struct MessengerState {
    id: usize,
    idle_pos: (f64, f64),
    pos: (f64, f64),
    task: Option<Task>,
    returning: bool,
    busy_ns: Nanos,
}

impl MessengerState {
    fn is_idle(&self) -> bool {
        self.task.is_none() && !self.returning
    }
}

#[derive(Debug, Default)]
struct IonSlot {
    busy: bool,
    waiters: VecDeque<usize>,
}

/// A configured simulation, ready to run.
pub struct Simulation {
    config: SimConfig,
    layout: ChipLayout,
    gate_ns: Nanos,
    measure_ns: Nanos,
    pair_fidelity: f64,
    policy: Box<dyn AssignPolicy>,
}

struct Engine<'a> {
    sim: &'a Simulation,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    now: Nanos,
    limit: Option<Nanos>,
    backlog: VecDeque<u64>,
    pending: BTreeMap<u64, (RequestEndpoints, Nanos)>,
    messengers: Vec<MessengerState>,
    ions: BTreeMap<(usize, usize), IonSlot>,
    next_request: u64,
    submitted: u64,
    delivered: u64,
    rejected: u64,
    latencies: Vec<Nanos>,
    log: Vec<Event>,
    traces: Vec<TracePoint>,
    last_delivery: Nanos,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Simulation> {
        config.validate()?;
        let layout = config.layout.resolve()?;
        let gate_ns = to_ns(config.gate.gate_time() + config.ramp_overhead);
        let measure_ns = to_ns(config.measure_time);
        let gate_fidelity = config.gate.gate_fidelity()?;
        // clamp: fidelities below 1/16 saturate the depolarizing channel
        let p = depolarizing_p_for_gate_fidelity(gate_fidelity).min(1.0);
        let pair_fidelity = protocol_pair_fidelity(config.gate.gate_phase(), p)?;
        Ok(Simulation {
            config,
            layout,
            gate_ns,
            measure_ns,
            pair_fidelity,
            policy: Box::new(NearestIdle),
        })
    }

    /// Replace the assignment policy.
    pub fn with_policy(mut self, policy: Box<dyn AssignPolicy>) -> Simulation {
        self.policy = policy;
        self
    }

    pub fn layout(&self) -> &ChipLayout {
        &self.layout
    }

    /// Bell fidelity attached to every delivered pair in this run.
    pub fn pair_fidelity(&self) -> f64 {
        self.pair_fidelity
    }

    /// Transport leg duration between two points, s.
    fn leg_seconds(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let distance = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let constraint = TransportConstraint {
            a_limit: self.config.transport.a_limit,
            v_limit: self.config.transport.v_limit,
        };
        let plan = plan_transport(distance, constraint, self.config.transport.profile_kind)
            .expect("validated constraint");
        plan.duration + self.config.transport.extra_settle_time
    }

    /// Execute the run.
    pub fn run(&self) -> Metrics {
        let mut engine = Engine::new(self);
        engine.seed_arrivals();
        engine.drive();
        engine.into_metrics()
    }
}

/// Validate a configuration and run it.
pub fn run(config: SimConfig) -> Result<Metrics> {
    Ok(Simulation::new(config)?.run())
}

impl<'a> Engine<'a> {
    fn new(sim: &'a Simulation) -> Engine<'a> {
        let messengers = sim
            .config
            .messengers
            .iter()
            .map(|m| {
                let pos = match m.start {
                    MessengerStart::Idle { idle } => sim.layout.idle_positions[idle],
                    MessengerStart::At { at } => at,
                };
                MessengerState {
                    id: m.id,
                    idle_pos: pos,
                    pos,
                    task: None,
                    returning: false,
                    busy_ns: 0,
                }
            })
            .collect::<Vec<_>>();
        let mut traces = Vec::new();
        for m in &messengers {
            traces.push(TracePoint {
                time_ns: 0,
                messenger: m.id,
                x: m.pos.0,
                y: m.pos.1,
            });
        }
        Engine {
            sim,
            rng: ChaCha8Rng::seed_from_u64(sim.config.seed),
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
            limit: sim.config.duration_limit.map(to_ns),
            backlog: VecDeque::new(),
            pending: BTreeMap::new(),
            messengers,
            ions: BTreeMap::new(),
            next_request: 0,
            submitted: 0,
            delivered: 0,
            rejected: 0,
            latencies: Vec::new(),
            log: Vec::new(),
            traces,
            last_delivery: 0,
        }
    }

    fn schedule(&mut self, time: Nanos, step: Step) {
        let request = match step {
            Step::Arrival { request } => request,
            Step::TransportDone { messenger }
            | Step::GateDone { messenger }
            | Step::MeasureDone { messenger } => self.messengers[messenger]
                .task
                .map(|t| t.request)
                .unwrap_or(u64::MAX),
            Step::ReturnDone { .. } => u64::MAX,
        };
        self.heap.push(Scheduled {
            time,
            rank: step.rank(),
            request,
            seq: self.seq,
            step,
        });
        self.seq += 1;
    }

    fn emit(&mut self, kind: EventKind, request: Option<u64>, messenger: Option<usize>, detail: String) {
        self.log.push(Event {
            time_ns: self.now,
            kind,
            request,
            messenger,
            detail,
        });
    }

    fn seed_arrivals(&mut self) {
        match self.sim.config.requests {
            RequestModel::Closed { count } => {
                for r in 0..count {
                    self.schedule(0, Step::Arrival { request: r });
                    self.next_request = r + 1;
                }
            }
            RequestModel::Open { rate } => {
                let first = self.sample_interarrival(rate);
                if self.within_limit(first) {
                    self.schedule(first, Step::Arrival { request: 0 });
                    self.next_request = 1;
                }
            }
        }
    }

    fn sample_interarrival(&mut self, rate: f64) -> Nanos {
        let u: f64 = self.rng.gen();
        to_ns(-(1.0 - u).ln() / rate)
    }

    fn within_limit(&self, t: Nanos) -> bool {
        self.limit.map_or(true, |l| t <= l)
    }

    fn drive(&mut self) {
        while let Some(next) = self.heap.pop() {
            if !self.within_limit(next.time) {
                break;
            }
            self.now = next.time;
            match next.step {
                Step::Arrival { request } => self.on_arrival(request),
                Step::TransportDone { messenger } => self.on_transport_done(messenger),
                Step::GateDone { messenger } => self.on_gate_done(messenger),
                Step::MeasureDone { messenger } => self.on_measure_done(messenger),
                Step::ReturnDone { messenger } => self.on_return_done(messenger),
            }
        }
    }

    fn draw_endpoints(&mut self, request: u64) -> RequestEndpoints {
        match &self.sim.config.endpoints {
            EndpointModel::Cycle(cycle) => cycle[(request as usize) % cycle.len()],
            EndpointModel::RandomPairs => {
                let zones = self.sim.layout.zone_count();
                let a = self.rng.gen_range(0..zones);
                let mut b = self.rng.gen_range(0..zones - 1);
                if b >= a {
                    b += 1;
                }
                let last_a = self.sim.layout.zones[a].chain.num_ions - 1;
                RequestEndpoints {
                    from: Endpoint::Ion { zone: a, ion: last_a },
                    to: Endpoint::Ion { zone: b, ion: 0 },
                }
            }
        }
    }

    fn endpoint_label(&self, endpoint: Endpoint) -> String {
        match endpoint {
            Endpoint::Ion { zone, ion } => format!("z{zone}i{ion}"),
            Endpoint::Idle { idle } => format!("idle{idle}"),
        }
    }

    fn on_arrival(&mut self, request: u64) {
        let endpoints = self.draw_endpoints(request);
        self.submitted += 1;
        let detail = format!(
            "from={} to={}",
            self.endpoint_label(endpoints.from),
            self.endpoint_label(endpoints.to)
        );
        self.emit(EventKind::RequestArrival, Some(request), None, detail);

        let over_capacity = self
            .sim
            .config
            .queue_capacity
            .map_or(false, |cap| self.backlog.len() >= cap && !self.any_idle());
        if over_capacity {
            self.rejected += 1;
            self.emit(
                EventKind::RequestRejected,
                Some(request),
                None,
                "backlog full".into(),
            );
        } else {
            self.pending.insert(request, (endpoints, self.now));
            self.backlog.push_back(request);
            self.try_dispatch();
        }

        // keep the open-workload arrival stream going
        if let RequestModel::Open { rate } = self.sim.config.requests {
            let next = self.now + self.sample_interarrival(rate);
            if self.within_limit(next) {
                let id = self.next_request;
                self.next_request += 1;
                self.schedule(next, Step::Arrival { request: id });
            }
        }
    }

    fn any_idle(&self) -> bool {
        self.messengers.iter().any(|m| m.is_idle())
    }

    fn try_dispatch(&mut self) {
        while !self.backlog.is_empty() {
            let idle: Vec<(usize, (f64, f64))> = self
                .messengers
                .iter()
                .filter(|m| m.is_idle())
                .map(|m| (m.id, m.pos))
                .collect();
            if idle.is_empty() {
                return;
            }
            let request = *self.backlog.front().unwrap();
            let (endpoints, arrival) = self.pending[&request];
            let target = self
                .sim
                .layout
                .position(endpoints.from)
                .expect("validated endpoint");
            let chosen = self.sim.policy.assign(&idle, target);
            let index = self
                .messengers
                .iter()
                .position(|m| m.id == chosen && m.is_idle())
                .expect("policy returned a non-idle messenger");
            self.backlog.pop_front();
            self.messengers[index].task = Some(Task {
                request,
                from: endpoints.from,
                to: endpoints.to,
                phase: TaskPhase::ToFirst,
                arrival,
                service_start: self.now,
            });
            self.start_leg(index, endpoints.from);
        }
    }

    /// Begin a transport leg of the active task toward `target`.
    fn start_leg(&mut self, index: usize, target: Endpoint) {
        let m_id = self.messengers[index].id;
        let request = self.messengers[index].task.map(|t| t.request);
        let from = self.messengers[index].pos;
        let to = self.sim.layout.position(target).expect("validated endpoint");
        let leg_ns = to_ns(self.sim.leg_seconds(from, to));
        let detail = format!("to={}", self.endpoint_label(target));
        self.emit(EventKind::TransportStart, request, Some(m_id), detail);
        self.trace_leg(index, from, to, leg_ns);
        self.schedule(self.now + leg_ns, Step::TransportDone { messenger: index });
    }

    // Sample the leg at the plan's time grid, projected on the straight line
    // from -> to, decimated to the configured trace resolution.
    fn trace_leg(&mut self, index: usize, from: (f64, f64), to: (f64, f64), leg_ns: Nanos) {
        let m_id = self.messengers[index].id;
        let n = self.sim.config.trace_samples_per_leg;
        let distance = ((to.0 - from.0).powi(2) + (to.1 - from.1).powi(2)).sqrt();
        if distance == 0.0 || leg_ns == 0 {
            self.traces.push(TracePoint {
                time_ns: self.now + leg_ns,
                messenger: m_id,
                x: to.0,
                y: to.1,
            });
            return;
        }
        let constraint = TransportConstraint {
            a_limit: self.sim.config.transport.a_limit,
            v_limit: self.sim.config.transport.v_limit,
        };
        let plan = plan_transport(distance, constraint, self.sim.config.transport.profile_kind)
            .expect("validated constraint");
        let stride = (plan.samples.len() / n).max(1);
        let ux = (to.0 - from.0) / distance;
        let uy = (to.1 - from.1) / distance;
        for (k, s) in plan.samples.iter().enumerate() {
            if k % stride != 0 && k != plan.samples.len() - 1 {
                continue;
            }
            self.traces.push(TracePoint {
                time_ns: self.now + to_ns(s.t),
                messenger: m_id,
                x: from.0 + ux * s.x,
                y: from.1 + uy * s.x,
            });
        }
        // settle time holds the final position until the leg formally ends
        let end = self.now + leg_ns;
        if self.traces.last().map(|p| p.time_ns) != Some(end) {
            self.traces.push(TracePoint {
                time_ns: end,
                messenger: m_id,
                x: to.0,
                y: to.1,
            });
        }
    }

    fn ion_key(endpoint: Endpoint) -> (usize, usize) {
        match endpoint {
            Endpoint::Ion { zone, ion } => (zone, ion),
            Endpoint::Idle { .. } => unreachable!("requests target ions"),
        }
    }

    fn on_transport_done(&mut self, index: usize) {
        let task = self.messengers[index].task.expect("transport belongs to a task");
        let m_id = self.messengers[index].id;
        let target = match task.phase {
            TaskPhase::ToFirst => task.from,
            TaskPhase::ToSecond => task.to,
            _ => unreachable!("transport only happens en route to an ion"),
        };
        self.messengers[index].pos = self
            .sim
            .layout
            .position(target)
            .expect("validated endpoint");
        self.emit(
            EventKind::TransportEnd,
            Some(task.request),
            Some(m_id),
            format!("at={}", self.endpoint_label(target)),
        );
        let key = Self::ion_key(target);
        let slot = self.ions.entry(key).or_default();
        if slot.busy {
            slot.waiters.push_back(index);
        } else {
            self.begin_gate(index, key);
        }
    }

    fn begin_gate(&mut self, index: usize, ion: (usize, usize)) {
        let task = self.messengers[index].task.as_mut().expect("gate belongs to a task");
        task.phase = match task.phase {
            TaskPhase::ToFirst => TaskPhase::Gate1,
            TaskPhase::ToSecond => TaskPhase::Gate2,
            other => other,
        };
        let request = task.request;
        let m_id = self.messengers[index].id;
        self.ions.get_mut(&ion).expect("slot exists").busy = true;
        self.emit(
            EventKind::GateStart,
            Some(request),
            Some(m_id),
            format!("ion=z{}i{}", ion.0, ion.1),
        );
        self.schedule(self.now + self.sim.gate_ns, Step::GateDone { messenger: index });
    }

    fn on_gate_done(&mut self, index: usize) {
        let task = self.messengers[index].task.expect("gate belongs to a task");
        let m_id = self.messengers[index].id;
        let at = match task.phase {
            TaskPhase::Gate1 => task.from,
            TaskPhase::Gate2 => task.to,
            _ => unreachable!(),
        };
        let key = Self::ion_key(at);
        self.emit(
            EventKind::GateEnd,
            Some(task.request),
            Some(m_id),
            format!("ion=z{}i{}", key.0, key.1),
        );
        // release the communication ion and grant it to the next waiter
        let slot = self.ions.get_mut(&key).expect("slot exists");
        slot.busy = false;
        if let Some(waiter) = slot.waiters.pop_front() {
            self.begin_gate(waiter, key);
        }

        match task.phase {
            TaskPhase::Gate1 => {
                self.messengers[index].task.as_mut().unwrap().phase = TaskPhase::ToSecond;
                self.start_leg(index, task.to);
            }
            TaskPhase::Gate2 => {
                self.messengers[index].task.as_mut().unwrap().phase = TaskPhase::Measure;
                self.schedule(
                    self.now + self.sim.measure_ns,
                    Step::MeasureDone { messenger: index },
                );
            }
            _ => unreachable!(),
        }
    }

    fn on_measure_done(&mut self, index: usize) {
        let task = self.messengers[index].task.expect("measurement belongs to a task");
        let m_id = self.messengers[index].id;
        self.emit(
            EventKind::MeasureEnd,
            Some(task.request),
            Some(m_id),
            String::new(),
        );
        self.emit(
            EventKind::PairDelivered,
            Some(task.request),
            Some(m_id),
            format!("fidelity={}", self.sim.pair_fidelity),
        );
        self.delivered += 1;
        self.latencies.push(self.now - task.arrival);
        self.last_delivery = self.now;
        self.messengers[index].busy_ns += self.now - task.service_start;
        self.messengers[index].task = None;

        self.try_dispatch();
        // still idle: go park
        if self.messengers[index].is_idle() && self.messengers[index].pos != self.messengers[index].idle_pos {
            let from = self.messengers[index].pos;
            let to = self.messengers[index].idle_pos;
            let leg_ns = to_ns(self.sim.leg_seconds(from, to));
            self.messengers[index].returning = true;
            self.emit(
                EventKind::TransportStart,
                None,
                Some(m_id),
                "to=idle".into(),
            );
            self.trace_leg(index, from, to, leg_ns);
            self.schedule(self.now + leg_ns, Step::ReturnDone { messenger: index });
        }
    }

    fn on_return_done(&mut self, index: usize) {
        let m_id = self.messengers[index].id;
        self.messengers[index].pos = self.messengers[index].idle_pos;
        self.messengers[index].returning = false;
        self.emit(EventKind::TransportEnd, None, Some(m_id), "at=idle".into());
        self.try_dispatch();
    }

    fn into_metrics(mut self) -> Metrics {
        let elapsed_ns = match self.sim.config.requests {
            RequestModel::Open { .. } => self.limit.unwrap_or(self.last_delivery),
            RequestModel::Closed { .. } => match self.limit {
                Some(l) if self.backlog.len() as u64 + self.in_flight() > 0 => l,
                _ => self.last_delivery,
            },
        };
        let elapsed = elapsed_ns as f64 / 1e9;
        let throughput = if elapsed > 0.0 {
            self.delivered as f64 / elapsed
        } else {
            0.0
        };

        self.latencies.sort_unstable();
        let mean_latency = if self.latencies.is_empty() {
            0.0
        } else {
            self.latencies.iter().sum::<u64>() as f64 / self.latencies.len() as f64 / 1e9
        };
        let p95_latency = if self.latencies.is_empty() {
            0.0
        } else {
            let idx = ((self.latencies.len() as f64 * 0.95).ceil() as usize).max(1) - 1;
            self.latencies[idx] as f64 / 1e9
        };

        let messenger_utilization = self
            .messengers
            .iter()
            .map(|m| {
                let mut busy = m.busy_ns;
                if let Some(task) = m.task {
                    busy += elapsed_ns.saturating_sub(task.service_start);
                }
                if elapsed_ns == 0 {
                    0.0
                } else {
                    (busy as f64 / elapsed_ns as f64).min(1.0)
                }
            })
            .collect();

        let mean_pair_fidelity = if self.delivered > 0 {
            self.sim.pair_fidelity
        } else {
            0.0
        };

        self.traces.sort_by_key(|p| (p.time_ns, p.messenger));
        Metrics {
            submitted: self.submitted,
            delivered_pairs: self.delivered,
            rejected: self.rejected,
            queued_at_end: self.backlog.len() as u64,
            in_flight_at_end: self.in_flight(),
            elapsed,
            throughput,
            mean_latency,
            p95_latency,
            messenger_utilization,
            mean_pair_fidelity,
            event_log: self.log,
            traces: self.traces,
        }
    }

    fn in_flight(&self) -> u64 {
        self.messengers.iter().filter(|m| m.task.is_some()).count() as u64
    }
}
