use std::collections::BTreeSet;

use crate::ir::{Axis, Block, BlockType, Instruction, Program, QubitId};

/// Moves QL blocks that only allocate or apply single-qubit gates as late
/// as data dependencies allow.
///
/// Only QL blocks move, so the relative order of classical messages with
/// each peer is untouched. Programs with explicit precedence are returned
/// unchanged.
pub fn reorder_blocks(p: &Program) -> Program {
    reorder_marked(p).0
}

/// Same as [`reorder_blocks`], also reporting which output blocks moved.
pub(crate) fn reorder_marked(p: &Program) -> (Program, Vec<bool>) {
    let mut out = p.clone();
    let mut moved = vec![false; p.blocks.len()];
    if !p.is_linear() {
        return (out, moved);
    }
    // process from the back so blocks already pushed down act as barriers
    let mut i = out.blocks.len();
    while i > 0 {
        i -= 1;
        if !movable(&out.blocks[i]) {
            continue;
        }
        let mut j = i;
        while j + 1 < out.blocks.len() && can_pass(&out.blocks[j], &out.blocks[j + 1]) {
            out.blocks.swap(j, j + 1);
            moved.swap(j, j + 1);
            j += 1;
        }
        if j != i {
            moved[j] = true;
        }
    }
    let changed = moved.iter().any(|&m| m);
    if changed {
        out.renumber();
        out.critical_sections.clear();
        for b in &mut out.blocks {
            b.deadline = None;
        }
    }
    (out, moved)
}

fn block_qubits(b: &Block) -> BTreeSet<QubitId> {
    let mut qs = b.qubits();
    qs.extend(b.load.iter().copied());
    qs
}

/// Whether QL block `a` may be moved after its successor `b`.
pub(crate) fn can_pass(a: &Block, b: &Block) -> bool {
    let (ra, wa) = (a.reads(), a.writes());
    let (rb, wb) = (b.reads(), b.writes());
    if !wa.is_disjoint(&rb) || !ra.is_disjoint(&wb) || !wa.is_disjoint(&wb) {
        return false;
    }
    let shared: BTreeSet<QubitId> = block_qubits(a).intersection(&block_qubits(b)).copied().collect();
    if shared.is_empty() {
        return true;
    }
    // Only a pure-rotation block is deferred past another quantum block, and
    // never past one that is itself pure rotations, so swaps cannot cycle.
    if b.btype != BlockType::QL || !pure_rotations(a) || pure_rotations(b) {
        return false;
    }
    shared.iter().all(|&q| {
        let mut axes = a.instrs.iter().chain(&b.instrs).filter_map(|ins| qubit_axis(ins, q));
        match axes.next() {
            None => true,
            Some(None) => false,
            Some(Some(first)) => axes.all(|ax| ax == Some(first)),
        }
    })
}

/// QL blocks that measure, free or entangle stay in place; allocations and
/// single-qubit gates are deferred.
fn movable(b: &Block) -> bool {
    b.btype == BlockType::QL
        && b.instrs.iter().all(|i| match i {
            Instruction::QAlloc { .. } => true,
            Instruction::QGate { gate, .. } => gate.arity() == 1,
            _ => false,
        })
}

fn pure_rotations(b: &Block) -> bool {
    b.instrs.iter().all(|i| matches!(i, Instruction::QGate { gate, .. } if gate.is_rotation()))
}

/// `None` if `ins` does not touch `q`; `Some(None)` if it touches `q`
/// with a non-commuting operation; otherwise the commutation family.
fn qubit_axis(ins: &Instruction, q: QubitId) -> Option<Option<Axis>> {
    if !ins.qubits().contains(&q) {
        return None;
    }
    Some(match ins {
        Instruction::QGate { gate, .. } => match gate.axis() {
            Axis::None => None,
            ax => Some(ax),
        },
        _ => None,
    })
}
