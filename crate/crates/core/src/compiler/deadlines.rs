use super::CompileError;
use crate::ir::{BlockType, CriticalSection, Instruction, Program};
use crate::timing::TimingParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeadlinePolicy {
    Free,
    Selfish,
    Cooperative(u32),
}

/// Attaches relative deadlines to every block that has a predecessor.
pub fn assign_deadlines(p: &Program, policy: DeadlinePolicy, t: &TimingParams) -> Result<Program, CompileError> {
    if policy == DeadlinePolicy::Cooperative(0) {
        return Err(CompileError::Parameter("cooperative deadline multiple must be at least 1".into()));
    }
    let mut out = p.clone();
    let preds = p.predecessor_indices();
    for (i, b) in out.blocks.iter_mut().enumerate() {
        let quantum = b.btype.is_quantum();
        b.deadline = match policy {
            _ if preds[i].is_empty() => None,
            DeadlinePolicy::Free => None,
            DeadlinePolicy::Selfish if quantum => Some(t.quantum_instr_ns),
            DeadlinePolicy::Selfish => Some(t.classical_instr_ns),
            DeadlinePolicy::Cooperative(m) if quantum => Some(m as u64 * (t.quantum_instr_ns + t.max_gate_ns())),
            DeadlinePolicy::Cooperative(m) => Some(m as u64 * t.classical_instr_ns),
        };
    }
    Ok(out)
}

/// One critical section from the last QC block through the block holding
/// the last measurement.
pub fn add_critical_section(p: &Program) -> Result<Program, CompileError> {
    let last_qc = p.blocks.iter().rposition(|b| b.btype == BlockType::QC);
    let last_meas = p.blocks.iter().rposition(|b| b.instrs.iter().any(|i| matches!(i, Instruction::QMeasure { .. })));
    let (Some(first), Some(last)) = (last_qc, last_meas) else {
        return Err(CompileError::NotApplicable("critical section needs a QC block and a measurement".into()));
    };
    if last < first {
        return Err(CompileError::NotApplicable("last measurement precedes the last QC block".into()));
    }
    let mut out = p.clone();
    out.critical_sections = vec![CriticalSection { first: p.blocks[first].id, last: p.blocks[last].id }];
    Ok(out)
}
