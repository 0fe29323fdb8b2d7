//! # wsnsim
//!
//! Deterministic round-based simulator of hierarchical wireless sensor
//! networks with adaptive cluster-head duty cycling.
//!
//! This crate provides:
//! - Node deployment and the static network graph ([`topology`])
//! - The sensed physical field and window statistics ([`field`])
//! - BFS tree discovery and size-`k` cluster formation ([`clustering`])
//! - The first-order radio/processing energy model ([`energy`])
//! - The per-head adaptive sampling controller ([`controller`])
//! - The synchronous round loop and reports ([`engine`])
//! - Symbolic energy totals and savings ratios ([`metrics`])
//! - Config files, presets and overrides ([`config`])
//! - Trace/summary/manifest emission ([`report`])

pub mod clustering;
pub mod config;
pub mod controller;
pub mod energy;
pub mod engine;
pub mod error;
pub mod field;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod topology;

pub use config::{load_config, preset, SimConfig};
pub use engine::{run, SimReport};
pub use error::{Result, SimError};
