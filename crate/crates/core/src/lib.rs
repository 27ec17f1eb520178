//! Block-level compiler and discrete-event simulator for hybrid
//! quantum-classical network programs.
//!
//! Programs are ordered lists of non-preemptable blocks (classical local,
//! classical communication, quantum local and quantum communication). The
//! [`compiler`] rewrites programs to steer the node scheduler, the
//! [`runtime`] executes many program instances across nodes under an EDF
//! node scheduler with a time-binned entanglement network, and
//! [`experiments`] assembles the client/server applications and parameter
//! sweeps on top of both.

pub mod compiler;
pub mod experiments;
pub mod ir;
pub mod network;
pub mod quantum;
pub mod runtime;
pub mod timing;

pub use ir::{Block, BlockId, BlockType, Instruction, NodeId, Program, QubitId, Var};
pub use timing::TimingParams;
