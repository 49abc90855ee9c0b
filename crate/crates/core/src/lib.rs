//! Simulation library for algebraic gossip.
//!
//! Covers random linear network coding over small binary fields, graph
//! families and metrics, a synchronous/asynchronous gossip engine, the
//! uniform algebraic gossip, round-robin broadcast and TAG protocols, a
//! feedforward exponential queue-network simulator, and an experiment
//! harness with scaling fits.

pub mod engine;
pub mod error;
pub mod experiments;
pub mod field;
pub mod graph;
pub mod protocols;
pub mod queueing;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
