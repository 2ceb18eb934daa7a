//! Dual-process instruction routing and task planning over a deterministic grid tabletop.

pub mod aligner;
pub mod bank;
pub mod bench;
pub mod config;
pub mod dataset;
pub mod embedding;
pub mod fast;
pub mod equation;
pub mod model;
pub mod orchestrator;
pub mod planner;
pub mod provider;
pub mod sim;
pub mod stub;
