//! Performance metrics computed from a finished run's records.
//!
//! All of them are pure functions of the ledger, layout, failure plan and
//! collection trace. Nothing here reads node state.

use crate::collection::CollectionTrace;
use crate::engine::SimulationRecord;
use crate::failure::FailurePlan;
use crate::model::ReplicaLedger;
use crate::topology::NodeLayout;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadPoint {
    pub replica_index: u32,
    pub mean_distance_m: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub data_availability: f64,
    pub average_replicas: f64,
    /// False when no items were generated, in which case `average_replicas` is 0.
    pub average_replicas_defined: bool,
    pub replica_spread: Vec<SpreadPoint>,
    pub efficiency_curve: Vec<(u32, f64)>,
    pub total_unique: usize,
}

impl MetricsReport {
    pub fn from_record(record: &SimulationRecord) -> Self {
        let total = record.ledger.total_unique();
        let (average_replicas, defined) = average_replicas(&record.ledger, total);
        MetricsReport {
            data_availability: data_availability(&record.ledger, &record.failure_plan, total),
            average_replicas,
            average_replicas_defined: defined,
            replica_spread: replica_spread(&record.ledger, &record.layout),
            efficiency_curve: record
                .collection
                .as_ref()
                .map(|t| collection_efficiency(t, total))
                .unwrap_or_default(),
            total_unique: total,
        }
    }
}

/// Fraction of items with at least one copy on a node that survives the
/// plan. Items that never got a copy count as lost. No items means 1.0.
pub fn data_availability(ledger: &ReplicaLedger, plan: &FailurePlan, total_unique: usize) -> f64 {
    if total_unique == 0 {
        return 1.0;
    }
    let available = ledger
        .items()
        .values()
        .filter(|rec| rec.placements.iter().any(|p| !plan.is_victim(p.holder)))
        .count();
    available as f64 / total_unique as f64
}

/// Copies placed per item, counting the owner's local copy. Returns
/// `(0.0, false)` when there are no items.
pub fn average_replicas(ledger: &ReplicaLedger, total_unique: usize) -> (f64, bool) {
    if total_unique == 0 {
        return (0.0, false);
    }
    (ledger.total_placements() as f64 / total_unique as f64, true)
}

/// Mean owner-to-holder distance of the k-th copy, for every k that occurs.
pub fn replica_spread(ledger: &ReplicaLedger, layout: &NodeLayout) -> Vec<SpreadPoint> {
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (id, rec) in ledger.items() {
        let owner = layout.position(id.owner);
        for p in &rec.placements {
            let k = p.replica_index as usize;
            if sums.len() < k {
                sums.resize(k, (0.0, 0));
            }
            sums[k - 1].0 += owner.distance(&layout.position(p.holder));
            sums[k - 1].1 += 1;
        }
    }
    sums.into_iter()
        .enumerate()
        .map(|(i, (sum, count))| SpreadPoint {
            replica_index: i as u32 + 1,
            mean_distance_m: if count == 0 { 0.0 } else { sum / count as f64 },
            count,
        })
        .collect()
}

/// `(v, percent)` after each productive visit `v = 1, 2, ...`, against all
/// generated items.
pub fn collection_efficiency(trace: &CollectionTrace, total_unique: usize) -> Vec<(u32, f64)> {
    if total_unique == 0 {
        return Vec::new();
    }
    trace
        .productive()
        .enumerate()
        .map(|(i, e)| (i as u32 + 1, 100.0 * e.cumulative_unique as f64 / total_unique as f64))
        .collect()
}

/// First visit count at which the curve reaches `percent`.
pub fn visits_to_reach(curve: &[(u32, f64)], percent: f64) -> Option<u32> {
    curve.iter().find(|(_, p)| *p >= percent).map(|(v, _)| *v)
}

/// Curve value after `visits` productive visits (last value if the walk
/// ended earlier, 0 before the first visit).
pub fn percent_at(curve: &[(u32, f64)], visits: u32) -> f64 {
    curve.iter().take_while(|(v, _)| *v <= visits).last().map_or(0.0, |(_, p)| *p)
}
