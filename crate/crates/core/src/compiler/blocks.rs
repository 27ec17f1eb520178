use std::collections::BTreeSet;

use super::CompileError;
use crate::ir::{Block, BlockType, Instruction, Program, QubitId};

/// Merges every run of adjacent QL blocks into a single block.
pub fn block_selfish(p: &Program) -> Program {
    coalesce(p, |_, _| true)
}

/// Merges adjacent QL blocks when either of the pair is marked.
pub(crate) fn coalesce_marked(p: &Program, marks: &[bool]) -> Program {
    coalesce(p, |a, b| marks.get(a).copied().unwrap_or(false) || marks.get(b).copied().unwrap_or(false))
}

fn coalesce(p: &Program, allow: impl Fn(usize, usize) -> bool) -> Program {
    if !p.is_linear() {
        return p.clone();
    }
    let mut out = p.clone();
    out.blocks.clear();
    let mut prev_idx = usize::MAX;
    for (i, b) in p.blocks.iter().enumerate() {
        let merge = b.btype == BlockType::QL
            && prev_idx != usize::MAX
            && p.blocks[prev_idx].btype == BlockType::QL
            && allow(prev_idx, i);
        if merge {
            let last = out.blocks.last_mut().unwrap();
            let touched = last.qubits();
            for q in &b.load {
                if !touched.contains(q) && !last.load.contains(q) {
                    last.load.push(*q);
                }
            }
            last.instrs.extend(b.instrs.iter().cloned());
        } else {
            out.blocks.push(b.clone());
        }
        prev_idx = i;
    }
    if out.blocks.len() != p.blocks.len() {
        out.renumber();
        out.critical_sections.clear();
        for b in &mut out.blocks {
            b.deadline = None;
        }
    }
    out
}

/// Splits QL blocks so none holds more than `n` gates. Allocation,
/// measurement and free instructions are not counted.
pub fn block_cooperative(p: &Program, n: u32) -> Result<Program, CompileError> {
    if n == 0 {
        return Err(CompileError::Parameter("cooperative block size must be at least 1".into()));
    }
    if !p.is_linear() || p.blocks.iter().all(|b| b.btype != BlockType::QL || b.gate_count() <= n as usize) {
        return Ok(p.clone());
    }
    let mut out = p.clone();
    out.blocks.clear();
    let mut live: BTreeSet<QubitId> = BTreeSet::new();
    for b in &p.blocks {
        if b.btype == BlockType::QL && b.gate_count() > n as usize {
            out.blocks.extend(split_block(b, n as usize, &live));
        } else {
            out.blocks.push(b.clone());
        }
        track_liveness(&mut live, &b.instrs);
    }
    out.renumber();
    out.critical_sections.clear();
    for b in &mut out.blocks {
        b.deadline = None;
    }
    Ok(out)
}

fn track_liveness(live: &mut BTreeSet<QubitId>, instrs: &[Instruction]) {
    for ins in instrs {
        match ins {
            Instruction::QAlloc { qubit, .. } => {
                live.insert(*qubit);
            }
            Instruction::EprRequest { qubits, .. } => live.extend(qubits.iter().copied()),
            Instruction::QMeasure { qubit, .. } | Instruction::QFree { qubit } => {
                live.remove(qubit);
            }
            _ => {}
        }
    }
}

fn split_block(b: &Block, n: usize, live_before: &BTreeSet<QubitId>) -> Vec<Block> {
    // chunk boundaries: start a new chunk at a gate that would exceed n,
    // pulled back over the allocations right before it
    let mut cuts = Vec::new();
    let mut gates = 0;
    for (i, ins) in b.instrs.iter().enumerate() {
        if !ins.is_gate() {
            continue;
        }
        if gates == n {
            let mut c = i;
            while c > 0 && matches!(b.instrs[c - 1], Instruction::QAlloc { .. }) {
                c -= 1;
            }
            let floor = cuts.last().copied().unwrap_or(0);
            cuts.push(c.max(floor + 1));
            gates = 0;
        }
        gates += 1;
    }

    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(b.instrs.len());

    let mut live = live_before.clone();
    let mut touched_before: BTreeSet<QubitId> = b.load.iter().copied().collect();
    let mut chunks = Vec::new();
    for w in bounds.windows(2) {
        let instrs = b.instrs[w[0]..w[1]].to_vec();
        let mut chunk = Block::new(0, BlockType::QL, instrs);
        let here: BTreeSet<QubitId> = chunk.qubits();
        if chunks.is_empty() {
            chunk.load = b.load.clone();
        } else {
            chunk.load = here.iter().filter(|q| live.contains(q) && touched_before.contains(q)).copied().collect();
        }
        track_liveness(&mut live, &chunk.instrs);
        touched_before.extend(here);
        chunks.push(chunk);
    }
    chunks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_program, Gate, InitState};

    fn ql_gate_counts(p: &Program) -> Vec<usize> {
        p.blocks.iter().filter(|b| b.btype == BlockType::QL).map(Block::gate_count).collect()
    }

    fn eight_gate_block() -> Program {
        let mut p = Program::new("p", "a");
        let mut ins = vec![Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ }];
        ins.extend((0..8).map(|_| Instruction::gate(Gate::H, &[0])));
        ins.push(Instruction::QMeasure { qubit: QubitId(0), basis: crate::ir::Basis::Z, dest: "m".into() });
        p.push_block(BlockType::QL, ins);
        p
    }

    #[test]
    fn cap_not_exceeded_is_identity() {
        let p = eight_gate_block();
        assert_eq!(block_cooperative(&p, 8).unwrap(), p);
    }

    #[test]
    fn split_eight_by_three() {
        let p = eight_gate_block();
        let s = block_cooperative(&p, 3).unwrap();
        assert_eq!(ql_gate_counts(&s), vec![3, 3, 2]);
        // allocation stays in front, measurement at the back, qubit carried
        assert!(matches!(s.blocks[0].instrs[0], Instruction::QAlloc { .. }));
        assert!(matches!(s.blocks[2].instrs.last(), Some(Instruction::QMeasure { .. })));
        assert_eq!(s.blocks[1].load, vec![QubitId(0)]);
        assert_eq!(s.blocks[2].load, vec![QubitId(0)]);
        assert!(crate::ir::validate(&s).is_ok());
    }

    #[test]
    fn zero_is_rejected() {
        assert!(block_cooperative(&eight_gate_block(), 0).is_err());
    }

    #[test]
    fn selfish_grouping_matches_exhaustive_search() {
        let p = parse_program(
            "PROGRAM p node=a\nVAR x = 0\nBLOCK 1 QL\n QALLOC q0\nBLOCK 2 QL\n GATE H q0\n\
             BLOCK 3 CC\n SEND b x\nBLOCK 4 QL\n MEASURE q0 Z m\n",
        )
        .unwrap();
        let s = block_selfish(&p);
        let kinds: Vec<_> = s.blocks.iter().map(|b| b.btype).collect();
        assert_eq!(kinds, vec![BlockType::QL, BlockType::CC, BlockType::QL]);

        // exhaustive: every contiguous grouping of the 4 blocks (3 cut points);
        // a group is legal if it is one block or consists of QL blocks only
        let kinds_in: Vec<_> = p.blocks.iter().map(|b| b.btype).collect();
        let mut best: Option<(usize, Vec<usize>)> = None;
        for cuts in 0u32..8 {
            let mut groups: Vec<Vec<usize>> = vec![vec![0]];
            for i in 1..4 {
                if cuts & (1 << (i - 1)) != 0 {
                    groups.push(vec![i]);
                } else {
                    groups.last_mut().unwrap().push(i);
                }
            }
            let legal = groups.iter().all(|g| g.len() == 1 || g.iter().all(|&i| kinds_in[i] == BlockType::QL));
            if !legal {
                continue;
            }
            let ql = groups.iter().filter(|g| kinds_in[g[0]] == BlockType::QL).count();
            if best.as_ref().map_or(true, |(b, _)| ql < *b) {
                best = Some((ql, groups.iter().map(Vec::len).collect()));
            }
        }
        let (ql, sizes) = best.unwrap();
        assert_eq!(s.count_blocks(BlockType::QL), ql);
        let out_sizes: Vec<usize> = s.blocks.iter().map(|b| b.instrs.len()).collect();
        assert_eq!(out_sizes, vec![2, 1, 1]);
        assert_eq!(sizes, vec![2, 1, 1]);
    }

    #[test]
    fn alternating_blocks_unchanged() {
        let p = parse_program(
            "PROGRAM p node=a\nVAR x = 0\nBLOCK 1 QL\n QALLOC q0\nBLOCK 2 CC\n SEND b x\nBLOCK 3 QL\n MEASURE q0 Z m\n",
        )
        .unwrap();
        assert_eq!(block_selfish(&p), p);
    }

    #[test]
    fn split_then_merge_round_trips() {
        let p = eight_gate_block();
        for n in 1..=8 {
            let back = block_selfish(&block_cooperative(&p, n).unwrap());
            assert_eq!(back, p, "n = {n}");
        }
    }

    #[test]
    fn realloc_iterations_do_not_load() {
        // two alloc/2-gate/measure iterations in one block, cap 2
        let mut p = Program::new("p", "a");
        let mut ins = Vec::new();
        for k in 0..2 {
            ins.push(Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ });
            ins.push(Instruction::gate(Gate::H, &[0]));
            ins.push(Instruction::gate(Gate::H, &[0]));
            ins.push(Instruction::QMeasure {
                qubit: QubitId(0),
                basis: crate::ir::Basis::Z,
                dest: format!("m{k}").into(),
            });
        }
        p.push_block(BlockType::QL, ins);
        let s = block_cooperative(&p, 2).unwrap();
        assert_eq!(s.blocks.len(), 2);
        assert!(s.blocks.iter().all(|b| b.load.is_empty()));
        assert!(matches!(s.blocks[1].instrs[0], Instruction::QAlloc { .. }));
    }
}
