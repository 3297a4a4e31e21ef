//! Node deployment, disk-model connectivity and the analytic neighborhood
//! estimates used to calibrate the radio radius.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{FieldGeometry, Fields, NodeId, Point};

/// Node positions inside a field, indexed by `NodeId`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLayout {
    positions: Vec<Point>,
    geometry: FieldGeometry,
}

impl NodeLayout {
    pub fn new(geometry: FieldGeometry, positions: Vec<Point>) -> Result<Self> {
        if let Some((i, p)) = positions.iter().enumerate().find(|(_, p)| !geometry.contains(p)) {
            return Err(Error::config(
                "layout",
                format!("node {} at ({}, {}) lies outside the field", i + 1, p.x, p.y),
            ));
        }
        Ok(NodeLayout { positions, geometry })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn geometry(&self) -> &FieldGeometry {
        &self.geometry
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.positions[id.index()]
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.positions.len()).map(NodeId::from_index)
    }

    /// `node_id,x,y` per line.
    pub fn to_text(&self) -> String {
        self.ids()
            .map(|id| {
                let p = self.position(id);
                format!("{},{},{}\n", id, p.x, p.y)
            })
            .collect()
    }

    /// Inverse of [`NodeLayout::to_text`]. Ids must be exactly `1..=n`, in any order.
    pub fn from_text(geometry: FieldGeometry, text: &str) -> Result<Self> {
        let mut rows: Vec<(NodeId, Point)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f = Fields::new(line, i + 1);
            f.expect_len(3)?;
            rows.push((f.node(0)?, Point::new(f.num(1)?, f.num(2)?)));
        }
        rows.sort_by_key(|(id, _)| *id);
        for (i, (id, _)) in rows.iter().enumerate() {
            if id.index() != i {
                return Err(Error::config("layout", format!("node ids must be 1..={} without gaps", rows.len())));
            }
        }
        NodeLayout::new(geometry, rows.into_iter().map(|(_, p)| p).collect())
    }
}

/// Symmetric, irreflexive neighbor sets under a closed-disk radio model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMap {
    radius_alpha: f64,
    neighbors: Vec<Vec<NodeId>>,
}

impl AdjacencyMap {
    pub fn radius(&self) -> f64 {
        self.radius_alpha
    }

    /// Neighbors of `id` in ascending id order.
    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.neighbors[id.index()]
    }

    pub fn are_neighbors(&self, a: NodeId, b: NodeId) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.neighbors.is_empty() {
            return 0.0;
        }
        self.neighbors.iter().map(Vec::len).sum::<usize>() as f64 / self.neighbors.len() as f64
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Whether every node can reach every other node.
    pub fn is_connected(&self) -> bool {
        if self.neighbors.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.neighbors.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for n in &self.neighbors[i] {
                if !seen[n.index()] {
                    seen[n.index()] = true;
                    stack.push(n.index());
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Places `n` nodes independently and uniformly in the field.
pub fn deploy_uniform<R: Rng + ?Sized>(n: usize, geometry: &FieldGeometry, rng: &mut R) -> NodeLayout {
    assert!(n >= 1, "deploy_uniform needs at least one node");
    let (c1, c2) = (geometry.c1(), geometry.c2());
    let positions = (0..n)
        .map(|_| Point::new(rng.gen_range(c1.x..=c2.x), rng.gen_range(c1.y..=c2.y)))
        .collect();
    NodeLayout {
        positions,
        geometry: *geometry,
    }
}

/// Two nodes are neighbors iff their distance is at most `alpha`.
pub fn build_adjacency(layout: &NodeLayout, alpha: f64) -> AdjacencyMap {
    assert!(alpha > 0.0, "alpha must be positive");
    let pos = layout.positions();
    let mut neighbors = vec![Vec::new(); pos.len()];
    for i in 0..pos.len() {
        for j in (i + 1)..pos.len() {
            if pos[i].distance(&pos[j]) <= alpha {
                neighbors[i].push(NodeId::from_index(j));
                neighbors[j].push(NodeId::from_index(i));
            }
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    AdjacencyMap {
        radius_alpha: alpha,
        neighbors,
    }
}

/// Expected one-hop neighbors per node: `pi * alpha^2 * n / area - 1`.
///
/// May be negative for sparse deployments; returned unclamped.
pub fn expected_neighbors_per_node(alpha: f64, n: usize, area: f64) -> f64 {
    PI * alpha * alpha * n as f64 / area - 1.0
}

/// Expected sensor nodes inside the sink's radius at a site: `pi * cr^2 * n / area`.
pub fn expected_nodes_in_sink_range(cr: f64, n: usize, area: f64) -> f64 {
    PI * cr * cr * n as f64 / area
}
