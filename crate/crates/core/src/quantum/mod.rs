//! Few-qubit mixed-state backend: noisy gates, memory dephasing, Werner
//! EPR pairs and projective measurement.

mod density;
mod noise;
mod store;

pub use density::{hadamard, init_vector, matmul2, phase_distance, unitary_1q, DensityMatrix, Mat2};
pub use noise::{apply_gate, idle_dephase, make_epr, NoiseModel};
pub use store::QubitStore;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("qubit {0} is not live")]
    DeadQubit(u32),
    #[error("qubit {0} is already live")]
    AlreadyLive(u32),
    #[error("negative idle time {0} ns")]
    NegativeTime(i64),
    #[error("{0}")]
    BadParameter(String),
}
