//! Simulation and analysis of controlled evolutionary spreading on weighted
//! networks.
//!
//! A population of `n` nodes on a weighted graph holds a binary state. Each
//! link fires at a rate equal to its weight; when it joins a 0-node and a
//! 1-node, the novel state 1 wins with probability `beta` and the resident
//! state 0 wins otherwise. An exogenous control signal `U(t)` turns 0-nodes
//! into 1-nodes at additional rates. The crate provides:
//!
//! - [`graph`]: weighted graphs, benchmark generators and cut profiles;
//! - [`dynamics`]: exact event-driven simulation, control policies and the
//!   coupled simulators used to check monotonicity;
//! - [`bounds`]: closed-form bounds on the expected spreading time and cost;
//! - [`oracle`]: exact expected values on small graphs by linear solves;
//! - [`harness`]: replicated experiments, statistics, sweeps and output.

pub mod bounds;
pub mod control;
pub mod coupled;
pub mod diagnostics;
pub mod dynamics;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod rng;
pub mod sampler;

pub use control::{ControlPolicy, ControlVector, PolicyError, TargetRule};
pub use dynamics::{simulate, Configuration, SimError, SimOptions, SimResult};
pub use graph::{Graph, GraphError, GraphTag, Profiles};
