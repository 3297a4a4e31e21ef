//! Domain types shared by every part of the simulator.
//!
//! Every type here has a canonical one-line text form (comma-separated
//! fields, nested lists separated by `;`, tuple members by `:`) through
//! [`LineRecord`]. The ledger is multi-line, one record per line, with a
//! leading tag column. Floats use Rust's shortest round-trip formatting so
//! `from_line(to_line(x)) == x` holds exactly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Canonical line-oriented serialization.
pub trait LineRecord: Sized {
    fn to_line(&self) -> String;
    fn from_line(line: &str) -> Result<Self>;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Rectangular sensing field given by two opposite corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGeometry {
    c1: Point,
    c2: Point,
}

impl FieldGeometry {
    /// Field of the given size with its lower-left corner at the origin.
    pub fn new(width: f64, height: f64) -> Result<Self> {
        Self::from_corners(Point::new(0.0, 0.0), Point::new(width, height))
    }

    pub fn from_corners(c1: Point, c2: Point) -> Result<Self> {
        if !(c1.x < c2.x && c1.y < c2.y) || !c1.x.is_finite() || !c2.y.is_finite() {
            return Err(Error::config(
                "field",
                format!("corners ({}, {}) / ({}, {}) do not span a positive area", c1.x, c1.y, c2.x, c2.y),
            ));
        }
        Ok(FieldGeometry { c1, c2 })
    }

    pub fn c1(&self) -> Point {
        self.c1
    }

    pub fn c2(&self) -> Point {
        self.c2
    }

    pub fn width(&self) -> f64 {
        self.c2.x - self.c1.x
    }

    pub fn height(&self) -> f64 {
        self.c2.y - self.c1.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.c1.x && p.x <= self.c2.x && p.y >= self.c1.y && p.y <= self.c2.y
    }
}

/// Area of the sensing field in square meters.
pub fn area(geometry: &FieldGeometry) -> f64 {
    geometry.area()
}

/// Sensor node identifier, `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(i as u32 + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataItemId {
    pub owner: NodeId,
    pub seq: u32,
}

impl DataItemId {
    pub fn new(owner: NodeId, seq: u32) -> Self {
        DataItemId { owner, seq }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataItem {
    pub id: DataItemId,
    pub generated_at: f64,
}

/// A data item travelling through the network to collect replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMessage {
    pub item: DataItem,
    pub remaining_r: u32,
    /// Previous replica holders, in placement order.
    pub pr: Vec<NodeId>,
    /// Previously visited nodes, in visiting order.
    pub pv: Vec<NodeId>,
    /// Neighbors of every replica holder so far.
    pub cn: BTreeSet<NodeId>,
    pub hop_count: u32,
}

impl DataMessage {
    pub fn fresh(item: DataItem, replication_degree: u32) -> Self {
        DataMessage {
            item,
            remaining_r: replication_degree,
            pr: Vec::new(),
            pv: Vec::new(),
            cn: BTreeSet::new(),
            hop_count: 0,
        }
    }
}

/// One row of a node's neighbor attribute table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborAttributes {
    pub node: NodeId,
    pub non: u32,
    pub rm: u32,
    pub last_heard: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub position: Point,
    pub buffer: Vec<DataItemId>,
    pub buffer_capacity: u32,
    pub n_att: BTreeMap<NodeId, NeighborAttributes>,
    pub sense_interval: f64,
    pub next_seq: u32,
    pub alive: bool,
}

impl NodeState {
    pub fn new(id: NodeId, position: Point, buffer_capacity: u32, sense_interval: f64) -> Self {
        NodeState {
            id,
            position,
            buffer: Vec::new(),
            buffer_capacity,
            n_att: BTreeMap::new(),
            sense_interval,
            next_seq: 0,
            alive: true,
        }
    }

    pub fn remaining_memory(&self) -> u32 {
        self.buffer_capacity.saturating_sub(self.buffer.len() as u32)
    }

    pub fn holds(&self, item: &DataItemId) -> bool {
        self.buffer.contains(item)
    }

    /// Stores `item` if there is room. Returns whether it was stored.
    pub fn try_store(&mut self, item: DataItemId) -> bool {
        if self.remaining_memory() == 0 {
            return false;
        }
        self.buffer.push(item);
        true
    }
}

/// The mobile collector.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkState {
    pub position: Option<Point>,
    pub cr: f64,
    pub collected: BTreeSet<DataItemId>,
    pub visited_sites: Vec<Point>,
    pub visited_nodes: BTreeSet<NodeId>,
    pub sites_visited: u32,
    pub max_sites: u32,
}

impl SinkState {
    pub fn new(cr: f64, max_sites: u32) -> Self {
        SinkState {
            position: None,
            cr,
            collected: BTreeSet::new(),
            visited_sites: Vec::new(),
            visited_nodes: BTreeSet::new(),
            sites_visited: 0,
            max_sites,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Replication degree unmet and no eligible neighbor was found.
    NoCandidate,
    /// The terminal node had no room and no eligible neighbor.
    BufferFullTerminal,
    /// The message was addressed to a node that failed before delivery.
    LostInTransit,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::NoCandidate => "no_candidate",
            DropReason::BufferFullTerminal => "buffer_full_terminal",
            DropReason::LostInTransit => "lost_in_transit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "no_candidate" => Some(DropReason::NoCandidate),
            "buffer_full_terminal" => Some(DropReason::BufferFullTerminal),
            "lost_in_transit" => Some(DropReason::LostInTransit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub holder: NodeId,
    pub replica_index: u32,
    pub placed_at: f64,
    pub hop_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropRecord {
    pub item: DataItemId,
    pub node: NodeId,
    pub reason: DropReason,
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ItemRecord {
    pub generated_at: f64,
    pub placements: Vec<Placement>,
}

/// Ground-truth record of every generated item, every copy placement, every
/// dropped replication attempt and every node failure.
///
/// Observer only: node behavior never reads it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplicaLedger {
    items: BTreeMap<DataItemId, ItemRecord>,
    drops: Vec<DropRecord>,
    failures: BTreeMap<NodeId, f64>,
}

impl ReplicaLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_item(&mut self, item: &DataItem) {
        let prev = self.items.insert(
            item.id,
            ItemRecord {
                generated_at: item.generated_at,
                placements: Vec::new(),
            },
        );
        assert!(prev.is_none(), "item {:?} generated twice", item.id);
    }

    /// Records a new copy and returns its replica index.
    pub fn record_placement(&mut self, item: DataItemId, holder: NodeId, at: f64, hop_count: u32) -> u32 {
        let rec = self
            .items
            .get_mut(&item)
            .unwrap_or_else(|| panic!("placement for unregistered item {item:?}"));
        assert!(
            rec.placements.iter().all(|p| p.holder != holder),
            "duplicate holder {holder} for {item:?}"
        );
        let replica_index = rec.placements.len() as u32 + 1;
        rec.placements.push(Placement {
            holder,
            replica_index,
            placed_at: at,
            hop_count,
        });
        replica_index
    }

    pub fn record_drop(&mut self, item: DataItemId, node: NodeId, reason: DropReason, at: f64) {
        self.drops.push(DropRecord { item, node, reason, at });
    }

    pub fn record_failure(&mut self, node: NodeId, at: f64) {
        self.failures.entry(node).or_insert(at);
    }

    pub fn items(&self) -> &BTreeMap<DataItemId, ItemRecord> {
        &self.items
    }

    pub fn item(&self, id: &DataItemId) -> Option<&ItemRecord> {
        self.items.get(id)
    }

    pub fn drops(&self) -> &[DropRecord] {
        &self.drops
    }

    pub fn failures(&self) -> &BTreeMap<NodeId, f64> {
        &self.failures
    }

    pub fn total_unique(&self) -> usize {
        self.items.len()
    }

    pub fn total_placements(&self) -> usize {
        self.items.values().map(|r| r.placements.len()).sum()
    }

    /// Whether `node` is still alive at time `t` according to recorded failures.
    pub fn is_alive_at(&self, node: NodeId, t: f64) -> bool {
        self.failures.get(&node).is_none_or(|&died| died > t)
    }

    /// Checks the structural invariants: contiguous replica indices and
    /// distinct holders per item.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (id, rec) in &self.items {
            let mut seen = BTreeSet::new();
            for (i, p) in rec.placements.iter().enumerate() {
                if p.replica_index != i as u32 + 1 {
                    return Err(format!("{id:?}: replica index {} at position {}", p.replica_index, i));
                }
                if !seen.insert(p.holder) {
                    return Err(format!("{id:?}: holder {} appears twice", p.holder));
                }
            }
        }
        Ok(())
    }

    /// One record per line: `G,owner,seq,generated_at`,
    /// `P,owner,seq,holder,replica_index,placed_at,hop_count`,
    /// `D,owner,seq,node,reason,at` and `F,node,at`.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (id, rec) in &self.items {
            out.push(format!("G,{},{},{}", id.owner, id.seq, rec.generated_at));
            for p in &rec.placements {
                out.push(format!(
                    "P,{},{},{},{},{},{}",
                    id.owner, id.seq, p.holder, p.replica_index, p.placed_at, p.hop_count
                ));
            }
        }
        for d in &self.drops {
            out.push(format!(
                "D,{},{},{},{},{}",
                d.item.owner,
                d.item.seq,
                d.node,
                d.reason.as_str(),
                d.at
            ));
        }
        for (n, at) in &self.failures {
            out.push(format!("F,{n},{at}"));
        }
        out
    }

    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut ledger = ReplicaLedger::new();
        for (i, line) in lines.into_iter().enumerate() {
            let lineno = i + 1;
            let f = Fields::new(line, lineno);
            match f.get(0)? {
                "G" => {
                    f.expect_len(4)?;
                    let id = DataItemId::new(f.node(1)?, f.num(2)?);
                    ledger.items.insert(
                        id,
                        ItemRecord {
                            generated_at: f.num(3)?,
                            placements: Vec::new(),
                        },
                    );
                }
                "P" => {
                    f.expect_len(7)?;
                    let id = DataItemId::new(f.node(1)?, f.num(2)?);
                    let rec = ledger
                        .items
                        .get_mut(&id)
                        .ok_or_else(|| Error::parse(lineno, "placement before item record"))?;
                    rec.placements.push(Placement {
                        holder: f.node(3)?,
                        replica_index: f.num(4)?,
                        placed_at: f.num(5)?,
                        hop_count: f.num(6)?,
                    });
                }
                "D" => {
                    f.expect_len(6)?;
                    let reason = DropReason::parse(f.get(4)?)
                        .ok_or_else(|| Error::parse(lineno, format!("bad drop reason `{}`", f.get(4).unwrap_or(""))))?;
                    ledger.drops.push(DropRecord {
                        item: DataItemId::new(f.node(1)?, f.num(2)?),
                        node: f.node(3)?,
                        reason,
                        at: f.num(5)?,
                    });
                }
                "F" => {
                    f.expect_len(3)?;
                    ledger.failures.insert(f.node(1)?, f.num(2)?);
                }
                other => return Err(Error::parse(lineno, format!("unknown ledger tag `{other}`"))),
            }
        }
        Ok(ledger)
    }
}

/// Comma-split view over one record line.
pub(crate) struct Fields<'a> {
    parts: Vec<&'a str>,
    line: usize,
}

impl<'a> Fields<'a> {
    pub(crate) fn new(s: &'a str, line: usize) -> Self {
        Fields {
            parts: s.trim_end_matches(['\r', '\n']).split(',').collect(),
            line,
        }
    }

    pub(crate) fn expect_len(&self, n: usize) -> Result<()> {
        if self.parts.len() != n {
            return Err(Error::parse(self.line, format!("expected {n} fields, found {}", self.parts.len())));
        }
        Ok(())
    }

    pub(crate) fn get(&self, i: usize) -> Result<&'a str> {
        self.parts
            .get(i)
            .copied()
            .ok_or_else(|| Error::parse(self.line, format!("missing field {i}")))
    }

    pub(crate) fn num<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        let s = self.get(i)?;
        s.trim()
            .parse()
            .map_err(|_| Error::parse(self.line, format!("field {i}: cannot parse `{s}`")))
    }

    pub(crate) fn node(&self, i: usize) -> Result<NodeId> {
        let id: u32 = self.num(i)?;
        if id == 0 {
            return Err(Error::parse(self.line, "node ids start at 1"));
        }
        Ok(NodeId(id))
    }

    pub(crate) fn bool(&self, i: usize) -> Result<bool> {
        match self.get(i)? {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            s => Err(Error::parse(self.line, format!("field {i}: `{s}` is not a boolean"))),
        }
    }

    /// Splits field `i` on `;`, parsing each element with `f`.
    pub(crate) fn list<T>(&self, i: usize, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
        let s = self.get(i)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';')
            .map(|e| f(e).ok_or_else(|| Error::parse(self.line, format!("field {i}: bad element `{e}`"))))
            .collect()
    }
}

fn join<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> String) -> String {
    items.into_iter().map(f).collect::<Vec<_>>().join(";")
}

fn parse_node(s: &str) -> Option<NodeId> {
    s.parse::<u32>().ok().filter(|&v| v > 0).map(NodeId)
}

fn parse_item_id(s: &str) -> Option<DataItemId> {
    let (o, q) = s.split_once(':')?;
    Some(DataItemId::new(parse_node(o)?, q.parse().ok()?))
}

fn parse_point(s: &str) -> Option<Point> {
    let (x, y) = s.split_once(':')?;
    Some(Point::new(x.parse().ok()?, y.parse().ok()?))
}

/// `width,height,c1x,c1y,c2x,c2y`
impl LineRecord for FieldGeometry {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.width(),
            self.height(),
            self.c1.x,
            self.c1.y,
            self.c2.x,
            self.c2.y
        )
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(6)?;
        let g = FieldGeometry::from_corners(Point::new(f.num(2)?, f.num(3)?), Point::new(f.num(4)?, f.num(5)?))?;
        let (w, h): (f64, f64) = (f.num(0)?, f.num(1)?);
        if w != g.width() || h != g.height() {
            return Err(Error::parse(1, "width/height disagree with corners"));
        }
        Ok(g)
    }
}

/// `id`
impl LineRecord for NodeId {
    fn to_line(&self) -> String {
        self.0.to_string()
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(1)?;
        f.node(0)
    }
}

/// `owner,seq`
impl LineRecord for DataItemId {
    fn to_line(&self) -> String {
        format!("{},{}", self.owner, self.seq)
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(2)?;
        Ok(DataItemId::new(f.node(0)?, f.num(1)?))
    }
}

/// `owner,seq,generated_at`
impl LineRecord for DataItem {
    fn to_line(&self) -> String {
        format!("{},{},{}", self.id.owner, self.id.seq, self.generated_at)
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(3)?;
        Ok(DataItem {
            id: DataItemId::new(f.node(0)?, f.num(1)?),
            generated_at: f.num(2)?,
        })
    }
}

/// `owner,seq,generated_at,remaining_r,hop_count,pr,pv,cn` with the three
/// node lists `;`-separated.
impl LineRecord for DataMessage {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.item.id.owner,
            self.item.id.seq,
            self.item.generated_at,
            self.remaining_r,
            self.hop_count,
            join(&self.pr, |n| n.to_string()),
            join(&self.pv, |n| n.to_string()),
            join(&self.cn, |n| n.to_string()),
        )
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(8)?;
        Ok(DataMessage {
            item: DataItem {
                id: DataItemId::new(f.node(0)?, f.num(1)?),
                generated_at: f.num(2)?,
            },
            remaining_r: f.num(3)?,
            hop_count: f.num(4)?,
            pr: f.list(5, parse_node)?,
            pv: f.list(6, parse_node)?,
            cn: f.list(7, parse_node)?.into_iter().collect(),
        })
    }
}

/// `node,non,rm,last_heard`
impl LineRecord for NeighborAttributes {
    fn to_line(&self) -> String {
        format!("{},{},{},{}", self.node, self.non, self.rm, self.last_heard)
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(4)?;
        Ok(NeighborAttributes {
            node: f.node(0)?,
            non: f.num(1)?,
            rm: f.num(2)?,
            last_heard: f.num(3)?,
        })
    }
}

/// `id,x,y,buffer_capacity,sense_interval,next_seq,alive,buffer,n_att` where
/// buffer is `owner:seq;...` and n_att is `node:non:rm:last_heard;...`.
impl LineRecord for NodeState {
    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.id,
            self.position.x,
            self.position.y,
            self.buffer_capacity,
            self.sense_interval,
            self.next_seq,
            u8::from(self.alive),
            join(&self.buffer, |d| format!("{}:{}", d.owner, d.seq)),
            join(self.n_att.values(), |a| format!("{}:{}:{}:{}", a.node, a.non, a.rm, a.last_heard)),
        )
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(9)?;
        let rows = f.list(8, |s| {
            let mut it = s.split(':');
            let a = NeighborAttributes {
                node: parse_node(it.next()?)?,
                non: it.next()?.parse().ok()?,
                rm: it.next()?.parse().ok()?,
                last_heard: it.next()?.parse().ok()?,
            };
            it.next().is_none().then_some(a)
        })?;
        Ok(NodeState {
            id: f.node(0)?,
            position: Point::new(f.num(1)?, f.num(2)?),
            buffer_capacity: f.num(3)?,
            sense_interval: f.num(4)?,
            next_seq: f.num(5)?,
            alive: f.bool(6)?,
            buffer: f.list(7, parse_item_id)?,
            n_att: rows.into_iter().map(|a| (a.node, a)).collect(),
        })
    }
}

/// `x,y,cr,max_sites,sites_visited,collected,visited_sites,visited_nodes`;
/// x and y are empty before the first site.
impl LineRecord for SinkState {
    fn to_line(&self) -> String {
        let (x, y) = match self.position {
            Some(p) => (p.x.to_string(), p.y.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{x},{y},{},{},{},{},{},{}",
            self.cr,
            self.max_sites,
            self.sites_visited,
            join(&self.collected, |d| format!("{}:{}", d.owner, d.seq)),
            join(&self.visited_sites, |p| format!("{}:{}", p.x, p.y)),
            join(&self.visited_nodes, |n| n.to_string()),
        )
    }

    fn from_line(line: &str) -> Result<Self> {
        let f = Fields::new(line, 1);
        f.expect_len(8)?;
        let position = match (f.get(0)?, f.get(1)?) {
            ("", "") => None,
            _ => Some(Point::new(f.num(0)?, f.num(1)?)),
        };
        Ok(SinkState {
            position,
            cr: f.num(2)?,
            max_sites: f.num(3)?,
            sites_visited: f.num(4)?,
            collected: f.list(5, parse_item_id)?.into_iter().collect(),
            visited_sites: f.list(6, parse_point)?,
            visited_nodes: f.list(7, parse_node)?.into_iter().collect(),
        })
    }
}
