//! Deterministic discrete-event kernel.
//!
//! Events are totally ordered by `(fire_at, seq)` where `seq` is assigned at
//! scheduling time, so two runs with the same config and seed process the
//! same events in the same order. A run has two phases: dissemination
//! (sensing, advertisements, replication) and, once every in-flight message
//! has drained, collection by the mobile sink.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collection::{self, CollectionState, CollectionTrace, SinkStrategyKind};
use crate::config::SimConfig;
use crate::error::Result;
use crate::failure::{self, FailurePlan};
use crate::model::{DataMessage, DropReason, NodeId, NodeState, Point, ReplicaLedger, SinkState};
use crate::replication::{self, AdvertisementMessage};
use crate::topology::{self, AdjacencyMap, NodeLayout};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Advert(AdvertisementMessage),
    Data(DataMessage),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    SenseTimer(NodeId),
    AdvertTimer(NodeId),
    MessageDelivery { from: NodeId, to: NodeId, payload: Payload },
    NodeFailure(NodeId),
    SinkArrival(Point),
    PhaseBoundary,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::SenseTimer(_) => "sense",
            EventKind::AdvertTimer(_) => "advert",
            EventKind::MessageDelivery {
                payload: Payload::Advert(_),
                ..
            } => "deliver_advert",
            EventKind::MessageDelivery {
                payload: Payload::Data(_), ..
            } => "deliver_data",
            EventKind::NodeFailure(_) => "failure",
            EventKind::SinkArrival(_) => "sink_arrival",
            EventKind::PhaseBoundary => "phase_boundary",
        }
    }

    /// The node the event happens at, if any.
    pub fn actor(&self) -> Option<NodeId> {
        match self {
            EventKind::SenseTimer(n) | EventKind::AdvertTimer(n) | EventKind::NodeFailure(n) => Some(*n),
            EventKind::MessageDelivery { to, .. } => Some(*to),
            EventKind::SinkArrival(_) | EventKind::PhaseBoundary => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub fire_at: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed so the std max-heap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.fire_at.total_cmp(&self.fire_at).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Priority queue with FIFO tie-breaking and a monotone clock.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Enqueues `kind` at `fire_at` and returns its tiebreak sequence number.
    ///
    /// Panics if `fire_at` lies in the past.
    pub fn schedule(&mut self, fire_at: f64, kind: EventKind) -> u64 {
        assert!(
            fire_at >= self.now,
            "event {} scheduled at {fire_at} before now {}",
            kind.label(),
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { fire_at, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<Event> {
        let ev = self.heap.pop()?;
        self.now = ev.fire_at;
        Some(ev)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Dissemination,
    Collection,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    pub now: f64,
    pub dissemination_duration: f64,
    pub phase: Phase,
}

/// One processed event: `time,seq,kind,actor,peer`. `actor` is 0 for
/// sink/global events; `peer` is the sender of a delivery and empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub time: f64,
    pub seq: u64,
    pub kind: &'static str,
    pub actor: u32,
    pub peer: Option<u32>,
}

impl TraceEntry {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.time,
            self.seq,
            self.kind,
            self.actor,
            self.peer.map(|p| p.to_string()).unwrap_or_default()
        )
    }
}

/// Independent random streams so that, for example, the random replication
/// strategy consuming draws never shifts the failure plan or sink sites.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub layout: ChaCha8Rng,
    pub intervals: ChaCha8Rng,
    pub failures: ChaCha8Rng,
    pub strategy: ChaCha8Rng,
    pub sink: ChaCha8Rng,
    pub loss: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        RngStreams {
            layout: stream(1),
            intervals: stream(2),
            failures: stream(3),
            strategy: stream(4),
            sink: stream(5),
            loss: stream(6),
        }
    }
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub seed: u64,
    pub config: SimConfig,
    pub layout: NodeLayout,
    pub failure_plan: FailurePlan,
    pub ledger: ReplicaLedger,
    pub nodes: Vec<NodeState>,
    pub collection: Option<CollectionTrace>,
    pub sink: Option<SinkState>,
    pub event_trace: Option<Vec<TraceEntry>>,
}

/// The simulated world: nodes, radio graph, clock, queue and bookkeeping.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub(crate) config: SimConfig,
    pub(crate) seed: u64,
    pub(crate) clock: SimClock,
    pub(crate) queue: EventQueue,
    pub(crate) layout: NodeLayout,
    pub(crate) adjacency: AdjacencyMap,
    pub(crate) nodes: Vec<NodeState>,
    pub(crate) ledger: ReplicaLedger,
    pub(crate) failure_plan: FailurePlan,
    pub(crate) rng: RngStreams,
    pub(crate) trace: Option<Vec<TraceEntry>>,
    pub(crate) collection: Option<CollectionState>,
}

impl Simulation {
    /// Builds a world from scratch: uniform deployment, sensing intervals
    /// drawn from `[sense_min, sense_max]`, failure plan from the config.
    pub fn new(config: SimConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = RngStreams::new(seed);
        let layout = topology::deploy_uniform(config.node_count, &config.geometry(), &mut rng.layout);
        let intervals = (0..config.node_count)
            .map(|_| sample_interval(&config, &mut rng.intervals))
            .collect();
        let plan = failure::plan_failures(
            config.node_count,
            config.failure_fraction,
            config.failure_mode,
            config.dissemination_duration,
            &mut rng.failures,
        );
        let mut sim = Self::assemble(config, seed, layout, intervals, plan, rng)?;
        sim.schedule_initial_events();
        Ok(sim)
    }

    /// Builds a world over a pinned layout, sensing intervals and failure plan.
    pub fn from_parts(config: SimConfig, seed: u64, layout: NodeLayout, intervals: Vec<f64>, plan: FailurePlan) -> Result<Self> {
        config.validate()?;
        let mut sim = Self::assemble(config, seed, layout, intervals, plan, RngStreams::new(seed))?;
        sim.schedule_initial_events();
        Ok(sim)
    }

    /// A world with no timers and no failures scheduled; callers drive it by
    /// scheduling events directly. Useful for hand-traced micro scenarios.
    pub fn idle(config: SimConfig, seed: u64, layout: NodeLayout, intervals: Vec<f64>) -> Result<Self> {
        config.validate()?;
        Self::assemble(config, seed, layout, intervals, FailurePlan::empty(), RngStreams::new(seed))
    }

    fn assemble(config: SimConfig, seed: u64, layout: NodeLayout, intervals: Vec<f64>, plan: FailurePlan, rng: RngStreams) -> Result<Self> {
        if intervals.len() != layout.len() {
            return Err(crate::error::Error::config(
                "nodes.sense_interval",
                format!("{} intervals for {} nodes", intervals.len(), layout.len()),
            ));
        }
        let adjacency = topology::build_adjacency(&layout, config.alpha);
        let nodes = layout
            .ids()
            .zip(intervals)
            .map(|(id, iv)| NodeState::new(id, layout.position(id), config.buffer_capacity, iv))
            .collect();
        Ok(Simulation {
            clock: SimClock {
                now: 0.0,
                dissemination_duration: config.dissemination_duration,
                phase: Phase::Dissemination,
            },
            config,
            seed,
            queue: EventQueue::new(),
            layout,
            adjacency,
            nodes,
            ledger: ReplicaLedger::new(),
            failure_plan: plan,
            rng,
            trace: None,
            collection: None,
        })
    }

    fn schedule_initial_events(&mut self) {
        for (node, at) in self.failure_plan.schedule() {
            self.queue.schedule(at, EventKind::NodeFailure(node));
        }
        let ids: Vec<NodeId> = self.layout.ids().collect();
        for &id in &ids {
            self.queue.schedule(0.0, EventKind::AdvertTimer(id));
        }
        for &id in &ids {
            let first = self.nodes[id.index()].sense_interval;
            if first <= self.config.dissemination_duration {
                self.queue.schedule(first, EventKind::SenseTimer(id));
            }
        }
    }

    /// Turns on the per-event trace.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn clock(&self) -> SimClock {
        self.clock
    }

    pub fn now(&self) -> f64 {
        self.clock.now
    }

    pub fn layout(&self) -> &NodeLayout {
        &self.layout
    }

    pub fn adjacency(&self) -> &AdjacencyMap {
        &self.adjacency
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id.index()]
    }

    pub fn ledger(&self) -> &ReplicaLedger {
        &self.ledger
    }

    pub fn failure_plan(&self) -> &FailurePlan {
        &self.failure_plan
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes[id.index()].alive
    }

    /// Enqueues an event; panics when `fire_at` is before the current time.
    pub fn schedule(&mut self, fire_at: f64, kind: EventKind) -> u64 {
        self.queue.schedule(fire_at, kind)
    }

    fn delivery_lost(&mut self) -> bool {
        let p = self.config.drop_probability;
        p > 0.0 && self.rng.loss.gen_bool(p)
    }

    /// Sends `payload` to every alive neighbor of `from`, arriving after one
    /// hop delay. Returns the number of deliveries scheduled.
    pub fn broadcast(&mut self, from: NodeId, payload: Payload) -> usize {
        if !self.is_alive(from) {
            return 0;
        }
        let at = self.clock.now + self.config.hop_delay;
        let mut sent = 0;
        for i in 0..self.adjacency.degree(from) {
            let to = self.adjacency.neighbors(from)[i];
            if !self.is_alive(to) || self.delivery_lost() {
                continue;
            }
            self.queue.schedule(
                at,
                EventKind::MessageDelivery {
                    from,
                    to,
                    payload: payload.clone(),
                },
            );
            sent += 1;
        }
        sent
    }

    /// Sends `payload` over the link `from -> to`. Returns `true` once the
    /// message is on the air; whether it lands depends on `to` still being
    /// alive at delivery time.
    ///
    /// Panics if `to` is not a radio neighbor of `from`.
    pub fn unicast(&mut self, from: NodeId, to: NodeId, payload: Payload) -> bool {
        assert!(self.adjacency.are_neighbors(from, to), "unicast from {from} to non-neighbor {to}");
        let at = self.clock.now + self.config.hop_delay;
        if self.delivery_lost() {
            if let Payload::Data(msg) = &payload {
                self.ledger.record_drop(msg.item.id, to, DropReason::LostInTransit, at);
            }
            return true;
        }
        self.queue.schedule(at, EventKind::MessageDelivery { from, to, payload });
        true
    }

    fn record(&mut self, ev: &Event) {
        if let Some(trace) = &mut self.trace {
            let peer = match &ev.kind {
                EventKind::MessageDelivery { from, .. } => Some(from.0),
                _ => None,
            };
            trace.push(TraceEntry {
                time: ev.fire_at,
                seq: ev.seq,
                kind: ev.kind.label(),
                actor: ev.kind.actor().map_or(0, |n| n.0),
                peer,
            });
        }
    }

    /// Pops and handles one event. Returns `Ok(false)` when the queue is empty.
    pub fn step(&mut self) -> Result<bool> {
        let Some(ev) = self.queue.pop() else {
            return Ok(false);
        };
        debug_assert!(ev.fire_at >= self.clock.now);
        self.clock.now = ev.fire_at;
        // Timers of dead nodes count as cancelled: they vanish untraced.
        if let EventKind::SenseTimer(n) | EventKind::AdvertTimer(n) = ev.kind {
            if !self.is_alive(n) {
                return Ok(true);
            }
        }
        if let EventKind::NodeFailure(n) = ev.kind {
            if !self.is_alive(n) {
                return Ok(true);
            }
        }
        self.record(&ev);
        match ev.kind {
            EventKind::SenseTimer(n) => {
                debug_assert_eq!(self.clock.phase, Phase::Dissemination);
                replication::on_sense(self, n);
            }
            EventKind::AdvertTimer(n) => replication::on_advert_timer(self, n),
            EventKind::MessageDelivery { from, to, payload } => {
                if !self.is_alive(to) {
                    if let Payload::Data(msg) = payload {
                        self.ledger.record_drop(msg.item.id, to, DropReason::LostInTransit, self.clock.now);
                    }
                    return Ok(true);
                }
                match payload {
                    Payload::Advert(adv) => replication::on_receive_advert(self, to, adv),
                    Payload::Data(msg) => {
                        debug_assert!(self.adjacency.are_neighbors(from, to));
                        replication::handle_data_message(self, to, msg);
                    }
                }
            }
            EventKind::NodeFailure(n) => failure::apply_failure(self, n),
            EventKind::SinkArrival(site) => {
                debug_assert_eq!(self.clock.phase, Phase::Collection);
                collection::on_sink_arrival(self, site)?;
            }
            EventKind::PhaseBoundary => {
                self.clock.phase = match self.clock.phase {
                    Phase::Dissemination => Phase::Collection,
                    _ => Phase::Done,
                };
            }
        }
        Ok(true)
    }

    /// Runs the dissemination phase to completion: every timer up to the
    /// phase end plus all in-flight messages, then the phase boundary.
    pub fn run_dissemination(&mut self) -> Result<()> {
        if self.clock.phase != Phase::Dissemination {
            return Ok(());
        }
        while self.step()? {}
        let at = self.clock.now.max(self.config.dissemination_duration);
        self.queue.schedule(at, EventKind::PhaseBoundary);
        self.step()?;
        debug_assert_eq!(self.clock.phase, Phase::Collection);
        Ok(())
    }

    /// Runs the sink over the post-dissemination network.
    pub fn run_collection(&mut self, strategy: SinkStrategyKind, max_sites: u32) -> Result<CollectionTrace> {
        self.run_dissemination()?;
        let sink = SinkState::new(self.config.sink_cr, max_sites);
        self.collection = Some(CollectionState::new(strategy, sink));
        collection::start(self)?;
        while self.step()? {}
        self.clock.phase = Phase::Done;
        Ok(self.collection.as_ref().map(|c| c.trace.clone()).unwrap_or_default())
    }

    pub fn collection_state(&self) -> Option<&CollectionState> {
        self.collection.as_ref()
    }

    /// Dissemination, then collection with the configured sink strategy.
    pub fn run_until_done(mut self) -> Result<SimulationRecord> {
        self.run_dissemination()?;
        let collection = match self.config.collection_strategy {
            Some(s) => {
                let m = self.config.max_sites();
                Some(self.run_collection(s, m)?)
            }
            None => {
                self.clock.phase = Phase::Done;
                None
            }
        };
        Ok(SimulationRecord {
            seed: self.seed,
            config: self.config,
            layout: self.layout,
            failure_plan: self.failure_plan,
            ledger: self.ledger,
            nodes: self.nodes,
            sink: self.collection.map(|c| c.sink),
            collection,
            event_trace: self.trace,
        })
    }
}

fn sample_interval(config: &SimConfig, rng: &mut ChaCha8Rng) -> f64 {
    if config.sense_min == config.sense_max {
        config.sense_min
    } else {
        rng.gen_range(config.sense_min..=config.sense_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_orders_by_time_then_fifo() {
        let mut q = EventQueue::new();
        q.schedule(5.0, EventKind::SenseTimer(NodeId(1)));
        q.schedule(5.0, EventKind::SenseTimer(NodeId(2)));
        q.schedule(1.0, EventKind::PhaseBoundary);
        q.schedule(0.0, EventKind::AdvertTimer(NodeId(9)));
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| (e.fire_at, e.kind)).collect();
        assert_eq!(order[0], (0.0, EventKind::AdvertTimer(NodeId(9))));
        assert_eq!(order[1], (1.0, EventKind::PhaseBoundary));
        assert_eq!(order[2], (5.0, EventKind::SenseTimer(NodeId(1))));
        assert_eq!(order[3], (5.0, EventKind::SenseTimer(NodeId(2))));
    }

    #[test]
    fn schedule_at_now_fires_before_later() {
        let mut q = EventQueue::new();
        q.schedule(3.0, EventKind::PhaseBoundary);
        q.pop();
        q.schedule(7.0, EventKind::SenseTimer(NodeId(1)));
        q.schedule(3.0, EventKind::SenseTimer(NodeId(2)));
        assert_eq!(q.pop().unwrap().kind, EventKind::SenseTimer(NodeId(2)));
    }

    #[test]
    #[should_panic(expected = "before now")]
    fn schedule_into_past_panics() {
        let mut q = EventQueue::new();
        q.schedule(3.0, EventKind::PhaseBoundary);
        q.pop();
        q.schedule(2.0, EventKind::PhaseBoundary);
    }
}
