//! Simulation parameters and the sectioned `key = value` file format.
//!
//! ```text
//! # comment
//! [field]
//! width = 100
//! height = 100
//!
//! [nodes]
//! count = 100
//! alpha = 20
//! ```
//!
//! Keys, by section:
//!
//! | section       | key               | meaning                                      |
//! |---------------|-------------------|----------------------------------------------|
//! | `field`       | `width`, `height` | field size in meters                         |
//! | `nodes`       | `count`           | number of sensor nodes                       |
//! |               | `alpha`           | radio radius in meters                       |
//! |               | `buffer_capacity` | buffer size in item slots                    |
//! |               | `sense_min`, `sense_max` | sensing interval range in seconds     |
//! | `replication` | `strategy`        | `draco`, `greedy` or `random`                |
//! |               | `degree`          | target copies per item                       |
//! | `failure`     | `fraction`        | fraction of nodes that fail                  |
//! |               | `mode`            | `during_dissemination` or `at_phase_boundary`|
//! | `collection`  | `strategy`        | `draco`, `sa_rw`, `rw` or `none`             |
//! |               | `cr`              | sink radius in meters                        |
//! |               | `max_sites`       | site budget; `auto` means 4 x node count     |
//! | `sim`         | `duration`        | dissemination phase length in seconds        |
//! |               | `advert_interval` | resource advertisement period                |
//! |               | `hop_delay`       | per-hop delivery delay                       |
//! |               | `drop_probability`| per-delivery loss probability                |
//! |               | `stale_factor`    | rows older than this many advert periods are ignored |

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::collection::SinkStrategyKind;
use crate::error::{Error, Result};
use crate::failure::FailureMode;
use crate::model::FieldGeometry;
use crate::replication::ReplicationStrategyKind;

/// Everything needed to run one simulation apart from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub width: f64,
    pub height: f64,
    pub node_count: usize,
    pub alpha: f64,
    pub buffer_capacity: u32,
    pub sense_min: f64,
    pub sense_max: f64,
    pub replication_strategy: ReplicationStrategyKind,
    pub replication_degree: u32,
    pub failure_fraction: f64,
    pub failure_mode: FailureMode,
    pub collection_strategy: Option<SinkStrategyKind>,
    pub sink_cr: f64,
    pub max_sites: Option<u32>,
    pub dissemination_duration: f64,
    pub advert_interval: f64,
    pub hop_delay: f64,
    pub drop_probability: f64,
    pub stale_factor: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            width: 100.0,
            height: 100.0,
            node_count: 100,
            alpha: 20.0,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            sense_min: 1.0,
            sense_max: 4.0,
            replication_strategy: ReplicationStrategyKind::Draco,
            replication_degree: 3,
            failure_fraction: 0.0,
            failure_mode: FailureMode::DuringDissemination,
            collection_strategy: Some(SinkStrategyKind::Draco),
            sink_cr: 15.0,
            max_sites: None,
            dissemination_duration: 400.0,
            advert_interval: 10.0,
            hop_delay: 0.01,
            drop_probability: 0.0,
            stale_factor: 2.0,
        }
    }
}

/// Default buffer size in item slots. About 185 items per node are sensed
/// over the default 400 s, so buffers only fill at the busiest relay nodes.
pub const DEFAULT_BUFFER_CAPACITY: u32 = 3000;

impl SimConfig {
    pub fn geometry(&self) -> FieldGeometry {
        FieldGeometry::new(self.width, self.height).expect("validated geometry")
    }

    /// Site budget for the sink; four sites per node unless set.
    pub fn max_sites(&self) -> u32 {
        self.max_sites.unwrap_or(4 * self.node_count as u32)
    }

    /// Age after which a neighbor table row is ignored.
    pub fn stale_after(&self) -> f64 {
        self.stale_factor * self.advert_interval
    }

    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        FieldGeometry::new(self.width, self.height)
            .map_err(|_| Error::config("field.width", "field must have positive width and height"))?;
        if self.node_count == 0 {
            return Err(Error::config("nodes.count", "must be at least 1"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("nodes.alpha", "must be positive"));
        }
        if !(self.sense_min > 0.0 && self.sense_min <= self.sense_max) {
            return Err(Error::config("nodes.sense_min", "need 0 < sense_min <= sense_max"));
        }
        if self.replication_degree == 0 {
            return Err(Error::config("replication.degree", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.failure_fraction) {
            return Err(Error::config("failure.fraction", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(Error::config("sim.drop_probability", "must lie in [0, 1]"));
        }
        if !(self.sink_cr > 0.0 && self.sink_cr < self.width.min(self.height) / 2.0) {
            return Err(Error::config("collection.cr", "need 0 < cr < min(width, height) / 2"));
        }
        if !(self.dissemination_duration >= 0.0) {
            return Err(Error::config("sim.duration", "must be non-negative"));
        }
        if !(self.advert_interval > 0.0) {
            return Err(Error::config("sim.advert_interval", "must be positive"));
        }
        if !(self.hop_delay > 0.0) {
            return Err(Error::config("sim.hop_delay", "must be positive"));
        }
        if !(self.stale_factor > 0.0) {
            return Err(Error::config("sim.stale_factor", "must be positive"));
        }
        Ok(())
    }

    /// Applies one `section.key = value` setting.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let name = format!("{section}.{key}");
        let bad = |why: &str| Error::config(name.clone(), format!("`{value}`: {why}"));
        let real = || value.parse::<f64>().map_err(|_| bad("not a number"));
        let int = || value.parse::<u64>().map_err(|_| bad("not a non-negative integer"));
        match (section, key) {
            ("field", "width") => self.width = real()?,
            ("field", "height") => self.height = real()?,
            ("nodes", "count") => self.node_count = int()? as usize,
            ("nodes", "alpha") => self.alpha = real()?,
            ("nodes", "buffer_capacity") => self.buffer_capacity = int()? as u32,
            ("nodes", "sense_min") => self.sense_min = real()?,
            ("nodes", "sense_max") => self.sense_max = real()?,
            ("replication", "strategy") => {
                self.replication_strategy = ReplicationStrategyKind::parse(value).ok_or_else(|| bad("unknown strategy"))?
            }
            ("replication", "degree") => self.replication_degree = int()? as u32,
            ("failure", "fraction") => self.failure_fraction = real()?,
            ("failure", "mode") => self.failure_mode = FailureMode::parse(value).ok_or_else(|| bad("unknown mode"))?,
            ("collection", "strategy") => {
                self.collection_strategy = match value {
                    "none" => None,
                    v => Some(SinkStrategyKind::parse(v).ok_or_else(|| bad("unknown strategy"))?),
                }
            }
            ("collection", "cr") => self.sink_cr = real()?,
            ("collection", "max_sites") => {
                self.max_sites = match value {
                    "auto" => None,
                    _ => Some(int()? as u32),
                }
            }
            ("sim", "duration") => self.dissemination_duration = real()?,
            ("sim", "advert_interval") => self.advert_interval = real()?,
            ("sim", "hop_delay") => self.hop_delay = real()?,
            ("sim", "drop_probability") => self.drop_probability = real()?,
            ("sim", "stale_factor") => self.stale_factor = real()?,
            _ => return Err(Error::config(name, "unknown key")),
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        for entry in parse_sections(text)? {
            cfg.set(&entry.section, &entry.key, &entry.value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `from_text(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[field]\nwidth = {}\nheight = {}\n", self.width, self.height);
        let _ = writeln!(
            s,
            "[nodes]\ncount = {}\nalpha = {}\nbuffer_capacity = {}\nsense_min = {}\nsense_max = {}\n",
            self.node_count, self.alpha, self.buffer_capacity, self.sense_min, self.sense_max
        );
        let _ = writeln!(
            s,
            "[replication]\nstrategy = {}\ndegree = {}\n",
            self.replication_strategy.as_str(),
            self.replication_degree
        );
        let _ = writeln!(
            s,
            "[failure]\nfraction = {}\nmode = {}\n",
            self.failure_fraction,
            self.failure_mode.as_str()
        );
        let _ = writeln!(
            s,
            "[collection]\nstrategy = {}\ncr = {}\nmax_sites = {}\n",
            self.collection_strategy.map_or("none", SinkStrategyKind::as_str),
            self.sink_cr,
            self.max_sites.map_or_else(|| "auto".to_string(), |m| m.to_string())
        );
        let _ = writeln!(
            s,
            "[sim]\nduration = {}\nadvert_interval = {}\nhop_delay = {}\ndrop_probability = {}\nstale_factor = {}",
            self.dissemination_duration, self.advert_interval, self.hop_delay, self.drop_probability, self.stale_factor
        );
        s
    }

    /// Stable 64-bit fingerprint of the canonical text form.
    pub fn hash(&self) -> u64 {
        stable_hash(self.to_text().as_bytes())
    }
}

/// One `key = value` line with its enclosing section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub section: String,
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Splits sectioned text into entries, in file order.
pub fn parse_sections(text: &str) -> Result<Vec<Entry>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(i + 1, "unterminated section header"))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected `key = value`, got `{line}`")))?;
        if section.is_empty() {
            return Err(Error::parse(i + 1, "key outside of any section"));
        }
        out.push(Entry {
            section: section.clone(),
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

/// Groups entries by section, keeping the last value of a repeated key.
pub fn section_map(entries: &[Entry]) -> BTreeMap<(String, String), String> {
    entries
        .iter()
        .map(|e| ((e.section.clone(), e.key.clone()), e.value.clone()))
        .collect()
}

/// FNV-1a, 64 bit. Stable across platforms and releases.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
        assert_eq!(SimConfig::default().max_sites(), 400);
    }

    #[test]
    fn text_round_trip() {
        let cfg = SimConfig {
            replication_strategy: ReplicationStrategyKind::Greedy,
            collection_strategy: None,
            max_sites: Some(17),
            failure_fraction: 0.35,
            ..SimConfig::default()
        };
        let back = SimConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn diagnostics_name_the_key() {
        let err = SimConfig::from_text("[nodes]\nalpha = fast\n").unwrap_err();
        assert!(err.to_string().contains("nodes.alpha"), "{err}");
        let err = SimConfig::from_text("[nodes]\ncolour = red\n").unwrap_err();
        assert!(err.to_string().contains("nodes.colour"), "{err}");
        let err = SimConfig::from_text("[collection]\ncr = 60\n").unwrap_err();
        assert!(err.to_string().contains("collection.cr"), "{err}");
        assert!(SimConfig::from_text("width = 3\n").is_err());
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(b""), 0xcbf29ce484222325);
        assert_eq!(stable_hash(b"a"), 0xaf63dc4c8601ec8c);
    }
}
