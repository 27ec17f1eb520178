//! Entanglement link model, classical latency, network schedule and
//! topology data.

mod link;
mod schedule;
mod topology;

pub use link::{
    classical_latency_ns, fiber_delay_ns, formula_p_succ, sample_epr, ClassicalPart, EprOutcome, LinkParams,
    ETA_ION_HIGH, ETA_ION_LOW, LAB_P_SUCC,
};
pub use schedule::{build_schedule, AppId, NetworkSchedule};
pub use topology::{Topology, TopologyEntry};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("no topology entry for {0} - {1}")]
    UnknownPair(String, String),
}
