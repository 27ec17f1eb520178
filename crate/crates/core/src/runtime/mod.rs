//! Discrete-event execution of program instances on network nodes.

pub mod check;
mod edf;
mod sim;
mod trace;

use serde::{Deserialize, Serialize};

pub use edf::{edf_select, Candidate};
pub use sim::run_simulation;
pub use trace::{EventKind, InstanceReport, Proc, Trace, TraceEvent};

use crate::ir::{NodeId, Program, Var};
use crate::network::{AppId, LinkParams, NetworkSchedule};
use crate::quantum::NoiseModel;
use crate::timing::TimingParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeConfig {
    pub id: NodeId,
    pub num_qubits: usize,
    pub timing: TimingParams,
    pub noise: NoiseModel,
}

impl NodeConfig {
    pub fn new(id: impl Into<NodeId>, num_qubits: usize) -> Self {
        Self { id: id.into(), num_qubits, timing: TimingParams::default(), noise: NoiseModel::default() }
    }
}

/// Success condition on one measured variable: `value XOR flip == expected`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeCheck {
    pub var: Var,
    pub flip: bool,
    pub expected: u8,
}

impl OutcomeCheck {
    pub fn new(var: impl Into<Var>, expected: u8) -> Self {
        Self { var: var.into(), flip: false, expected }
    }
}

/// A program to run. Instances that talk to each other share an `app`; the
/// peer named in a message or EPR request is the instance of the same app
/// on that node.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub program: Program,
    pub app: Option<AppId>,
    pub arrival_ns: u64,
    pub checks: Vec<OutcomeCheck>,
}

impl InstanceSpec {
    pub fn new(program: Program, app: Option<AppId>) -> Self {
        Self { program, app, arrival_ns: 0, checks: Vec::new() }
    }

    pub fn with_checks(mut self, checks: Vec<OutcomeCheck>) -> Self {
        self.checks = checks;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig {
    pub link: LinkParams,
    pub schedule: NetworkSchedule,
    /// One-way classical message latency between any two nodes.
    pub latency_ns: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimOptions {
    pub seed: u64,
    pub record_trace: bool,
    /// Simulated-time limit; reaching it is an error.
    pub max_time_ns: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self { seed: 0, record_trace: true, max_time_ns: 1_000_000_000_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid program `{program}`: {detail}")]
    InvalidProgram { program: String, detail: String },
    #[error("program `{0}` runs on unknown node `{1}`")]
    UnknownNode(String, String),
    #[error("admission: node `{node}` has {capacity} qubits but its programs need {needed}")]
    Admission { node: String, capacity: usize, needed: usize },
    #[error("routing: {0}")]
    Routing(String),
    #[error("deadlock at t={time_ns}ns: {blocked:?}")]
    Deadlock { time_ns: u64, blocked: Vec<String> },
    #[error("simulated time limit {0}ns exceeded")]
    Timeout(u64),
    #[error("instance `{instance}`: {detail}")]
    Execution { instance: String, detail: String },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}

/// Seed of run `index` under `master`, so runs can execute in any order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        assert_eq!(derive_seed(3, 4), derive_seed(3, 4));
    }
}
