#![allow(dead_code)]

use draco_sim::config::SimConfig;
use draco_sim::engine::Simulation;
use draco_sim::model::{FieldGeometry, NeighborAttributes, NodeId, Point};
use draco_sim::topology::NodeLayout;

pub fn layout(points: &[(f64, f64)]) -> NodeLayout {
    NodeLayout::new(
        FieldGeometry::new(100.0, 100.0).unwrap(),
        points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
    )
    .unwrap()
}

/// A world with no timers: callers seed neighbor tables and schedule events.
pub fn idle_world(cfg: SimConfig, points: &[(f64, f64)]) -> Simulation {
    let cfg = SimConfig {
        node_count: points.len(),
        collection_strategy: None,
        ..cfg
    };
    let n = points.len();
    Simulation::idle(cfg, 0, layout(points), vec![1.0; n]).unwrap()
}

/// Writes a neighbor table row at `at` describing `about`.
pub fn set_row(sim: &mut Simulation, at: u32, about: u32, non: u32, rm: u32) {
    sim.node_mut(NodeId(at)).n_att.insert(
        NodeId(about),
        NeighborAttributes {
            node: NodeId(about),
            non,
            rm,
            last_heard: 0.0,
        },
    );
}

/// Fills every node's table with its true neighbor counts and free memory.
pub fn seed_tables(sim: &mut Simulation) {
    let ids: Vec<NodeId> = sim.layout().ids().collect();
    for &a in &ids {
        for &b in sim.adjacency().neighbors(a).to_vec().iter() {
            let non = sim.adjacency().degree(b) as u32;
            let rm = sim.node(b).remaining_memory();
            set_row(sim, a.0, b.0, non, rm);
        }
    }
}

pub fn holders(sim: &Simulation, owner: u32, seq: u32) -> Vec<u32> {
    sim.ledger()
        .item(&draco_sim::model::DataItemId::new(NodeId(owner), seq))
        .map(|r| r.placements.iter().map(|p| p.holder.0).collect())
        .unwrap_or_default()
}
