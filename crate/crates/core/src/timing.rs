use serde::{Deserialize, Serialize};

/// Processing-time constants shared by the duration model, the deadline
/// passes and the runtime. All values are integer nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingParams {
    pub classical_instr_ns: u64,
    pub quantum_instr_ns: u64,
    pub gate_1q_ns: u64,
    pub gate_2q_ns: u64,
    /// Node scheduler <-> processor messaging, paid once per block dispatch.
    pub sched_msg_ns: u64,
    /// Extra CPS time to take a classical message off the wire.
    pub recv_proc_ns: u64,
}

impl Default for TimingParams {
    fn default() -> Self {
        Self {
            classical_instr_ns: 15,
            quantum_instr_ns: 50_000,
            gate_1q_ns: 26_600,
            gate_2q_ns: 107_000,
            sched_msg_ns: 60,
            recv_proc_ns: 150,
        }
    }
}

impl TimingParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("classical_instr_ns", self.classical_instr_ns),
            ("quantum_instr_ns", self.quantum_instr_ns),
            ("gate_1q_ns", self.gate_1q_ns),
            ("gate_2q_ns", self.gate_2q_ns),
            ("sched_msg_ns", self.sched_msg_ns),
            ("recv_proc_ns", self.recv_proc_ns),
        ];
        for (name, v) in fields {
            if v == 0 {
                return Err(format!("timing parameter {name} must be positive"));
            }
        }
        Ok(())
    }

    pub fn max_gate_ns(&self) -> u64 {
        self.gate_1q_ns.max(self.gate_2q_ns)
    }
}
