//! Deterministic discrete-event simulator for distributed hop-by-hop data
//! replication and mobile-sink data collection in an IoT sensor field.

pub mod cli;
pub mod collection;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod failure;
pub mod metrics;
pub mod model;
pub mod replication;
pub mod topology;
pub mod validate;

pub use config::SimConfig;
pub use engine::{Simulation, SimulationRecord};
pub use error::{Error, Result};
