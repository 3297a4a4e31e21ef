//! Mobile-sink data collection.
//!
//! After dissemination the sink hops between random sites. A new site is
//! redrawn while it falls within `cr` of the current one (or repeats an
//! earlier site exactly). At each site the sink talks to the alive nodes in
//! range and pulls data from at most one of them:
//!
//! * `Draco`: broadcasts its collected-id snapshot, every unvisited node in
//!   range answers with how many items the sink lacks, and the largest answer
//!   wins (ties to the lowest id). Nothing new anywhere means no transfer.
//! * `SaRw`: the nearest unvisited node, regardless of what it holds.
//! * `Rw`: the nearest node, visited or not.

use std::collections::BTreeSet;

use rand::Rng;

use crate::engine::{EventKind, Simulation};
use crate::error::{Error, Result};
use crate::model::{DataItemId, FieldGeometry, NodeId, NodeState, Point, SinkState};

/// Rejection sampling gives up after this many redraws.
pub const MAX_SITE_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SinkStrategyKind {
    Draco,
    SaRw,
    Rw,
}

impl SinkStrategyKind {
    pub const ALL: [SinkStrategyKind; 3] = [Self::Draco, Self::SaRw, Self::Rw];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Draco => "draco",
            Self::SaRw => "sa_rw",
            Self::Rw => "rw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "draco" => Some(Self::Draco),
            "sa_rw" | "sarw" => Some(Self::SaRw),
            "rw" => Some(Self::Rw),
            _ => None,
        }
    }

    /// Whether the walk stops once every alive node has been visited.
    fn stops_when_all_visited(self) -> bool {
        matches!(self, Self::Draco | Self::SaRw)
    }
}

/// The sink's collected-id snapshot as broadcast at a site.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotDigest<'a> {
    pub ids: &'a BTreeSet<DataItemId>,
}

impl SnapshotDigest<'_> {
    /// How many of `buffer`'s items the sink does not have yet.
    pub fn new_items_in(&self, buffer: &[DataItemId]) -> u32 {
        buffer.iter().filter(|id| !self.ids.contains(id)).count() as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionEntry {
    pub site: Point,
    pub selected_node: Option<NodeId>,
    pub new_items: u32,
    pub cumulative_unique: u32,
    /// `(node, new item count)` answers heard at this site (DRACO only).
    pub replies: Vec<(NodeId, u32)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollectionTrace {
    pub entries: Vec<CollectionEntry>,
}

impl CollectionTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries where a node was selected.
    pub fn productive(&self) -> impl Iterator<Item = &CollectionEntry> {
        self.entries.iter().filter(|e| e.selected_node.is_some())
    }

    pub fn final_unique(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.cumulative_unique)
    }

    /// CSV with header `site_x,site_y,selected_node,new_items,cumulative_unique`;
    /// `selected_node` is empty for unproductive sites.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("site_x,site_y,selected_node,new_items,cumulative_unique\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.site.x,
                e.site.y,
                e.selected_node.map(|n| n.to_string()).unwrap_or_default(),
                e.new_items,
                e.cumulative_unique
            ));
        }
        s
    }
}

/// Sink plus its per-run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectionState {
    pub strategy: SinkStrategyKind,
    pub sink: SinkState,
    pub trace: CollectionTrace,
}

impl CollectionState {
    pub fn new(strategy: SinkStrategyKind, sink: SinkState) -> Self {
        CollectionState {
            strategy,
            sink,
            trace: CollectionTrace::default(),
        }
    }
}

/// Draws the next site: uniform in the field, redrawn while within `cr` of
/// the current position or equal to an earlier site.
pub fn generate_site<R: Rng + ?Sized>(
    rng: &mut R,
    geometry: &FieldGeometry,
    current: Option<Point>,
    cr: f64,
    pvs: &[Point],
) -> Result<Point> {
    let (c1, c2) = (geometry.c1(), geometry.c2());
    for _ in 0..MAX_SITE_REJECTIONS {
        let x = Point::new(rng.gen_range(c1.x..=c2.x), rng.gen_range(c1.y..=c2.y));
        if current.is_some_and(|p| p.distance(&x) <= cr) {
            continue;
        }
        if pvs.contains(&x) {
            continue;
        }
        return Ok(x);
    }
    Err(Error::SiteGeneration {
        attempts: MAX_SITE_REJECTIONS,
        cr,
    })
}

/// Alive nodes within `cr` of `site`, by id.
pub fn nodes_in_range(nodes: &[NodeState], site: Point, cr: f64) -> Vec<&NodeState> {
    nodes.iter().filter(|n| n.alive && n.position.distance(&site) <= cr).collect()
}

/// Nearest node to `site` among `candidates`, ties to the lowest id.
fn nearest<'a>(candidates: impl Iterator<Item = &'a NodeState>, site: Point) -> Option<&'a NodeState> {
    let mut best: Option<(&NodeState, f64)> = None;
    for n in candidates {
        let d = n.position.distance(&site);
        if best.is_none_or(|(b, bd)| d < bd || (d == bd && n.id < b.id)) {
            best = Some((n, d));
        }
    }
    best.map(|(n, _)| n)
}

/// Pulls every item of `node` the sink lacks; returns how many were new.
fn transfer(sink: &mut SinkState, node: &NodeState) -> u32 {
    node.buffer.iter().filter(|id| sink.collected.insert(**id)).count() as u32
}

fn finish_site(
    sink: &mut SinkState,
    site: Point,
    selected: Option<NodeId>,
    new_items: u32,
    replies: Vec<(NodeId, u32)>,
) -> CollectionEntry {
    sink.position = Some(site);
    sink.visited_sites.push(site);
    sink.sites_visited += 1;
    if let Some(n) = selected {
        sink.visited_nodes.insert(n);
    }
    CollectionEntry {
        site,
        selected_node: selected,
        new_items,
        cumulative_unique: sink.collected.len() as u32,
        replies,
    }
}

/// DRACO arrival: snapshot broadcast, replies, pull from the richest node.
pub fn sink_arrive_draco(sink: &mut SinkState, nodes: &[NodeState], site: Point) -> CollectionEntry {
    debug_assert!(sink.sites_visited < sink.max_sites);
    let digest = SnapshotDigest { ids: &sink.collected };
    let replies: Vec<(NodeId, u32)> = nodes_in_range(nodes, site, sink.cr)
        .into_iter()
        .filter(|n| !sink.visited_nodes.contains(&n.id))
        .map(|n| (n.id, digest.new_items_in(&n.buffer)))
        .collect();
    let mut best: Option<(NodeId, u32)> = None;
    for &(id, count) in &replies {
        if count > 0 && best.is_none_or(|(_, b)| count > b) {
            best = Some((id, count));
        }
    }
    let (selected, new_items) = match best {
        Some((id, _)) => (Some(id), transfer(sink, &nodes[id.index()])),
        None => (None, 0),
    };
    finish_site(sink, site, selected, new_items, replies)
}

/// SA-RW arrival: pull from the nearest unvisited node in range.
pub fn sink_arrive_sa_rw(sink: &mut SinkState, nodes: &[NodeState], site: Point) -> CollectionEntry {
    debug_assert!(sink.sites_visited < sink.max_sites);
    let in_range = nodes_in_range(nodes, site, sink.cr);
    let pick = nearest(in_range.into_iter().filter(|n| !sink.visited_nodes.contains(&n.id)), site).map(|n| n.id);
    let new_items = pick.map_or(0, |id| transfer(sink, &nodes[id.index()]));
    finish_site(sink, site, pick, new_items, Vec::new())
}

/// RW arrival: pull from the nearest node in range, revisits allowed.
pub fn sink_arrive_rw(sink: &mut SinkState, nodes: &[NodeState], site: Point) -> CollectionEntry {
    debug_assert!(sink.sites_visited < sink.max_sites);
    let pick = nearest(nodes_in_range(nodes, site, sink.cr).into_iter(), site).map(|n| n.id);
    let new_items = pick.map_or(0, |id| transfer(sink, &nodes[id.index()]));
    finish_site(sink, site, pick, new_items, Vec::new())
}

fn is_finished(state: &CollectionState, nodes: &[NodeState]) -> bool {
    if state.sink.sites_visited >= state.sink.max_sites {
        return true;
    }
    state.strategy.stops_when_all_visited() && nodes.iter().filter(|n| n.alive).all(|n| state.sink.visited_nodes.contains(&n.id))
}

fn schedule_next_site(sim: &mut Simulation) -> Result<()> {
    let state = sim.collection.as_ref().expect("collection state");
    if is_finished(state, &sim.nodes) {
        return Ok(());
    }
    let site = generate_site(
        &mut sim.rng.sink,
        &sim.layout.geometry().clone(),
        state.sink.position,
        state.sink.cr,
        &state.sink.visited_sites,
    )?;
    let now = sim.now();
    sim.schedule(now, EventKind::SinkArrival(site));
    Ok(())
}

/// Schedules the first site, unless there is nothing to do.
pub(crate) fn start(sim: &mut Simulation) -> Result<()> {
    schedule_next_site(sim)
}

/// Handles one `SinkArrival` event and schedules the next site.
pub(crate) fn on_sink_arrival(sim: &mut Simulation, site: Point) -> Result<()> {
    let state = sim.collection.as_mut().expect("collection state");
    let entry = match state.strategy {
        SinkStrategyKind::Draco => sink_arrive_draco(&mut state.sink, &sim.nodes, site),
        SinkStrategyKind::SaRw => sink_arrive_sa_rw(&mut state.sink, &sim.nodes, site),
        SinkStrategyKind::Rw => sink_arrive_rw(&mut state.sink, &sim.nodes, site),
    };
    state.trace.entries.push(entry);
    schedule_next_site(sim)
}
