use std::collections::BTreeMap;

use crate::ir::{Axis, BlockType, Gate, Instruction, Program, QubitId, Var};

/// Fuses same-axis rotations on a qubit that are separated by no other
/// operation on that qubit. The fused gate takes the later position and the
/// sum of both angles. QL blocks left empty are dropped.
pub fn merge_rotations(p: &Program) -> Program {
    merge_marked(p, &vec![false; p.blocks.len()]).0
}

pub(crate) fn merge_marked(p: &Program, marks: &[bool]) -> (Program, Vec<bool>) {
    if !p.is_linear() {
        return (p.clone(), marks.to_vec());
    }
    let mut slots: Vec<Vec<Option<Instruction>>> =
        p.blocks.iter().map(|b| b.instrs.iter().cloned().map(Some).collect()).collect();
    // qubit -> (block, instr, axis, angle variables) of its last operation if a rotation
    let mut pending: BTreeMap<QubitId, (usize, usize, Axis, Vec<Var>)> = BTreeMap::new();
    let mut changed = false;

    for bi in 0..slots.len() {
        let quantum = p.blocks[bi].btype == BlockType::QL;
        for ii in 0..slots[bi].len() {
            let ins = slots[bi][ii].clone().expect("not yet removed");
            if let Some(w) = ins.writes() {
                pending.retain(|_, (.., vars)| !vars.contains(w));
            }
            let qs = ins.qubits();
            let rotation = match &ins {
                Instruction::QGate { gate, qubits } if quantum && gate.is_rotation() => Some((gate, qubits[0])),
                _ => None,
            };
            let Some((gate, q)) = rotation else {
                for q in qs {
                    pending.remove(&q);
                }
                continue;
            };
            let axis = gate.axis();
            if let Some((pb, pi, pax, _)) = pending.get(&q).cloned() {
                if pax == axis {
                    let Some(Instruction::QGate { gate: earlier, .. }) = slots[pb][pi].take() else {
                        unreachable!("pending entry points at a rotation")
                    };
                    let sum = earlier.angle().unwrap().plus(gate.angle().unwrap());
                    let fused = match axis {
                        Axis::X => Gate::RX(sum),
                        Axis::Y => Gate::RY(sum),
                        _ => Gate::RZ(sum),
                    };
                    slots[bi][ii] = Some(Instruction::QGate { gate: fused, qubits: vec![q] });
                    changed = true;
                }
            }
            let vars = match &slots[bi][ii] {
                Some(Instruction::QGate { gate, .. }) => gate.angle().unwrap().vars().cloned().collect(),
                _ => unreachable!(),
            };
            pending.insert(q, (bi, ii, axis, vars));
        }
    }
    if !changed {
        return (p.clone(), marks.to_vec());
    }

    let mut out = p.clone();
    out.blocks.clear();
    let mut out_marks = Vec::new();
    let mut carry_load: Vec<QubitId> = Vec::new();
    for (bi, instrs) in slots.into_iter().enumerate() {
        let mut b = p.blocks[bi].clone();
        b.instrs = instrs.into_iter().flatten().collect();
        if b.instrs.is_empty() && b.btype == BlockType::QL {
            carry_load.extend(b.load.iter().copied());
            continue;
        }
        if b.btype == BlockType::QL && !carry_load.is_empty() {
            let touched = b.qubits();
            for q in carry_load.drain(..) {
                if touched.contains(&q) && !b.load.contains(&q) {
                    b.load.push(q);
                }
            }
        }
        out.blocks.push(b);
        out_marks.push(marks.get(bi).copied().unwrap_or(false));
    }
    if out.blocks.len() != p.blocks.len() {
        out.renumber();
        out.critical_sections.clear();
        for b in &mut out.blocks {
            b.deadline = None;
        }
    }
    (out, out_marks)
}
