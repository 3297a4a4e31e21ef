//! Permanent node failures.
//!
//! A plan fixes exactly `round(fraction * n)` victims up front. Victims are
//! the prefix of one seeded permutation and every node's failure time is
//! drawn whether or not it ends up a victim, so for a fixed seed the victims
//! at a lower fraction are a subset of those at a higher one, with identical
//! failure times.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::Simulation;
use crate::error::{Error, Result};
use crate::model::{Fields, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureMode {
    /// Failure times uniform over the dissemination phase.
    DuringDissemination,
    /// Every victim fails at the end of dissemination.
    AtPhaseBoundary,
}

impl FailureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureMode::DuringDissemination => "during_dissemination",
            FailureMode::AtPhaseBoundary => "at_phase_boundary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "during_dissemination" => Some(FailureMode::DuringDissemination),
            "at_phase_boundary" => Some(FailureMode::AtPhaseBoundary),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailurePlan {
    pub fraction: f64,
    pub mode: FailureMode,
    pub victims: BTreeSet<NodeId>,
    pub times: BTreeMap<NodeId, f64>,
}

impl FailurePlan {
    pub fn empty() -> Self {
        FailurePlan {
            fraction: 0.0,
            mode: FailureMode::DuringDissemination,
            victims: BTreeSet::new(),
            times: BTreeMap::new(),
        }
    }

    pub fn is_victim(&self, id: NodeId) -> bool {
        self.victims.contains(&id)
    }

    /// `(node, time)` pairs ordered by time, then id.
    pub fn schedule(&self) -> Vec<(NodeId, f64)> {
        let mut v: Vec<_> = self.times.iter().map(|(&n, &t)| (n, t)).collect();
        v.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        v
    }

    /// `node,time` per line, in schedule order.
    pub fn to_text(&self) -> String {
        self.schedule().into_iter().map(|(n, t)| format!("{n},{t}\n")).collect()
    }

    /// Reads a pinned plan. `fraction` is recomputed against `n`.
    pub fn from_text(text: &str, n: usize, mode: FailureMode) -> Result<Self> {
        let mut times = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f = Fields::new(line, i + 1);
            f.expect_len(2)?;
            let node = f.node(0)?;
            if node.index() >= n {
                return Err(Error::parse(i + 1, format!("node {node} outside 1..={n}")));
            }
            if times.insert(node, f.num(1)?).is_some() {
                return Err(Error::parse(i + 1, format!("node {node} listed twice")));
            }
        }
        Ok(FailurePlan {
            fraction: times.len() as f64 / n as f64,
            mode,
            victims: times.keys().copied().collect(),
            times,
        })
    }
}

/// Number of victims for a failure fraction, rounding half up.
pub fn victim_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor().min(n as f64) as usize
}

/// Draws a failure plan for `n` nodes.
pub fn plan_failures<R: Rng + ?Sized>(n: usize, fraction: f64, mode: FailureMode, duration: f64, rng: &mut R) -> FailurePlan {
    assert!((0.0..=1.0).contains(&fraction), "failure fraction {fraction} outside [0, 1]");
    // (0, duration]: 1 - u with u in [0, 1) never hits zero.
    let draw_times: Vec<f64> = (0..n).map(|_| duration * (1.0 - rng.gen::<f64>())).collect();
    let mut order: Vec<NodeId> = (0..n).map(NodeId::from_index).collect();
    order.shuffle(rng);
    let k = victim_count(n, fraction);
    let victims: BTreeSet<NodeId> = order[..k].iter().copied().collect();
    let times = victims
        .iter()
        .map(|&v| {
            let t = match mode {
                FailureMode::DuringDissemination => draw_times[v.index()],
                FailureMode::AtPhaseBoundary => duration,
            };
            (v, t)
        })
        .collect();
    FailurePlan {
        fraction,
        mode,
        victims,
        times,
    }
}

/// Kills `id` now. Its pending timers are dropped when they fire, deliveries
/// addressed to it become no-ops and its stored copies no longer count.
pub fn apply_failure(sim: &mut Simulation, id: NodeId) {
    let now = sim.now();
    let node = sim.node_mut(id);
    debug_assert!(node.alive);
    node.alive = false;
    sim.ledger.record_failure(id, now);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_fraction_is_empty() {
        let p = plan_failures(50, 0.0, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(p.victims.is_empty());
        assert!(p.times.is_empty());
    }

    #[test]
    fn full_fraction_takes_everyone() {
        let p = plan_failures(10, 1.0, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(p.victims.len(), 10);
        assert!(p.times.values().all(|&t| t > 0.0 && t <= 400.0));
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(victim_count(100, 0.2), 20);
        assert_eq!(victim_count(100, 0.7), 70);
        assert_eq!(victim_count(5, 0.5), 3);
        assert_eq!(victim_count(3, 0.5), 2);
        assert_eq!(victim_count(7, 0.0), 0);
    }

    #[test]
    fn boundary_mode_times() {
        let p = plan_failures(20, 0.5, FailureMode::AtPhaseBoundary, 400.0, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(p.victims.len(), 10);
        assert!(p.times.values().all(|&t| t == 400.0));
    }

    #[test]
    fn victims_nest_across_fractions() {
        let lo = plan_failures(100, 0.2, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(8));
        let hi = plan_failures(100, 0.7, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(8));
        assert!(lo.victims.is_subset(&hi.victims));
        for (n, t) in &lo.times {
            assert_eq!(hi.times[n], *t);
        }
    }

    #[test]
    fn each_node_equally_likely() {
        let mut counts = [0usize; 100];
        let seeds = 10_000;
        for s in 0..seeds {
            let p = plan_failures(100, 0.5, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(s));
            for v in p.victims {
                counts[v.index()] += 1;
            }
        }
        for (i, c) in counts.iter().enumerate() {
            let f = *c as f64 / seeds as f64;
            assert!((f - 0.5).abs() <= 0.02, "node {} chosen {f}", i + 1);
        }
    }

    #[test]
    fn text_round_trip() {
        let p = plan_failures(30, 0.3, FailureMode::DuringDissemination, 400.0, &mut ChaCha8Rng::seed_from_u64(4));
        let back = FailurePlan::from_text(&p.to_text(), 30, p.mode).unwrap();
        assert_eq!(back.victims, p.victims);
        assert_eq!(back.times, p.times);
        assert!(FailurePlan::from_text("31,1.0\n", 30, p.mode).is_err());
        assert!(FailurePlan::from_text("3,1.0\n3,2.0\n", 30, p.mode).is_err());
    }
}
