//! Discrete-time simulator and analysis toolkit for resilient dynamic
//! average consensus with a trusted-agent backbone.
//!
//! Good agents (trusted and ordinary) track the average of the trusted
//! agents' reference signals while adversarial agents inject arbitrary,
//! possibly per-neighbour values. The crate runs the protocol, records every
//! round, reconstructs the equivalent transition matrices, and evaluates the
//! asymptotic tracking bound against the recorded traces.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod config;
pub mod consensus;
pub mod graph;
pub mod output;
pub mod plot;
pub mod presets;
pub mod signals;

pub use adversary::AdversaryStrategy;
pub use consensus::{run, SimulationConfig, SimulationTrace};
pub use graph::{AgentId, AgentRole, NetworkTopology};
pub use signals::{SignalBank, SignalSpec};
