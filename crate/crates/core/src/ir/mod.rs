//! Hybrid program representation: blocks of classical and quantum
//! instructions, block precedence, relative deadlines and critical sections.

mod expr;
mod text;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::timing::TimingParams;

pub use expr::{AngleExpr, ExprError};
pub use text::{parse_program, parse_programs, write_program, write_programs, ParseError};
pub use validate::{validate, Rule, ValidationReport, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockId(pub u32);

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Program-local (virtual) qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub u32);

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Classical variable name. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
    pub fn is_valid_name(s: &str) -> bool {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

impl From<String> for Var {
    fn from(s: String) -> Self {
        Var(Arc::from(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockType {
    /// Classical local computation.
    CL,
    /// Classical communication.
    CC,
    /// Local quantum gates and measurements.
    QL,
    /// Entanglement generation.
    QC,
}

impl BlockType {
    pub fn is_quantum(self) -> bool {
        matches!(self, BlockType::QL | BlockType::QC)
    }
}

impl fmt::Display for BlockType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockType::CL => "CL",
            BlockType::CC => "CC",
            BlockType::QL => "QL",
            BlockType::QC => "QC",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        })
    }
}

/// Initial state of a freshly allocated qubit: one of the six Pauli
/// eigenstates. `PlusZ` is |0⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InitState {
    PlusX,
    MinusX,
    PlusY,
    MinusY,
    PlusZ,
    MinusZ,
}

impl InitState {
    pub const ALL: [InitState; 6] =
        [InitState::PlusX, InitState::MinusX, InitState::PlusY, InitState::MinusY, InitState::PlusZ, InitState::MinusZ];

    pub fn basis(self) -> Basis {
        match self {
            InitState::PlusX | InitState::MinusX => Basis::X,
            InitState::PlusY | InitState::MinusY => Basis::Y,
            InitState::PlusZ | InitState::MinusZ => Basis::Z,
        }
    }

    /// Outcome of measuring this state in its own basis.
    pub fn outcome(self) -> u8 {
        match self {
            InitState::PlusX | InitState::PlusY | InitState::PlusZ => 0,
            _ => 1,
        }
    }

    fn token(self) -> &'static str {
        match self {
            InitState::PlusX => "+x",
            InitState::MinusX => "-x",
            InitState::PlusY => "+y",
            InitState::MinusY => "-y",
            InitState::PlusZ => "+z",
            InitState::MinusZ => "-z",
        }
    }

    fn from_token(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "+x" => InitState::PlusX,
            "-x" => InitState::MinusX,
            "+y" => InitState::PlusY,
            "-y" => InitState::MinusY,
            "+z" | "0" => InitState::PlusZ,
            "-z" | "1" => InitState::MinusZ,
            _ => return None,
        })
    }
}

impl fmt::Display for InitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X,
    Z,
    H,
    RX(AngleExpr),
    RY(AngleExpr),
    RZ(AngleExpr),
    CZ,
}

/// Commutation family of a gate, used by the reordering and merging passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    None,
}

impl Gate {
    pub fn name(&self) -> &'static str {
        match self {
            Gate::X => "X",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::RX(_) => "RX",
            Gate::RY(_) => "RY",
            Gate::RZ(_) => "RZ",
            Gate::CZ => "CZ",
        }
    }

    pub fn arity(&self) -> usize {
        if matches!(self, Gate::CZ) {
            2
        } else {
            1
        }
    }

    pub fn angle(&self) -> Option<&AngleExpr> {
        match self {
            Gate::RX(a) | Gate::RY(a) | Gate::RZ(a) => Some(a),
            _ => None,
        }
    }

    pub fn axis(&self) -> Axis {
        match self {
            Gate::X | Gate::RX(_) => Axis::X,
            Gate::RY(_) => Axis::Y,
            Gate::Z | Gate::RZ(_) | Gate::CZ => Axis::Z,
            Gate::H => Axis::None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        self.angle().is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    /// Abstract classical work of `ops` instructions, optionally assigning
    /// an angle-expression result to a variable.
    ClassicalCompute {
        ops: u32,
        assign: Option<(Var, AngleExpr)>,
    },
    SendMsg {
        peer: NodeId,
        payload: Var,
    },
    RecvMsg {
        peer: NodeId,
        dest: Var,
    },
    QAlloc {
        qubit: QubitId,
        init: InitState,
    },
    QGate {
        gate: Gate,
        qubits: Vec<QubitId>,
    },
    /// Measurement frees the qubit.
    QMeasure {
        qubit: QubitId,
        basis: Basis,
        dest: Var,
    },
    QFree {
        qubit: QubitId,
    },
    EprRequest {
        peer: NodeId,
        count: u32,
        qubits: Vec<QubitId>,
    },
}

impl Instruction {
    pub fn gate(gate: Gate, qubits: &[u32]) -> Self {
        Instruction::QGate { gate, qubits: qubits.iter().map(|&q| QubitId(q)).collect() }
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, Instruction::ClassicalCompute { .. } | Instruction::SendMsg { .. } | Instruction::RecvMsg { .. })
    }

    pub fn is_gate(&self) -> bool {
        matches!(self, Instruction::QGate { .. })
    }

    /// Qubits touched by this instruction.
    pub fn qubits(&self) -> Vec<QubitId> {
        match self {
            Instruction::QAlloc { qubit, .. } | Instruction::QMeasure { qubit, .. } | Instruction::QFree { qubit } => {
                vec![*qubit]
            }
            Instruction::QGate { qubits, .. } | Instruction::EprRequest { qubits, .. } => qubits.clone(),
            _ => Vec::new(),
        }
    }

    /// Variables read by this instruction.
    pub fn reads(&self) -> Vec<Var> {
        match self {
            Instruction::ClassicalCompute { assign: Some((_, e)), .. } => e.vars().cloned().collect(),
            Instruction::SendMsg { payload, .. } => vec![payload.clone()],
            Instruction::QGate { gate, .. } => gate.angle().map(|e| e.vars().cloned().collect()).unwrap_or_default(),
            _ => Vec::new(),
        }
    }

    /// Variables written by this instruction.
    pub fn writes(&self) -> Option<&Var> {
        match self {
            Instruction::ClassicalCompute { assign: Some((v, _)), .. } => Some(v),
            Instruction::RecvMsg { dest, .. } | Instruction::QMeasure { dest, .. } => Some(dest),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub id: BlockId,
    pub btype: BlockType,
    pub instrs: Vec<Instruction>,
    /// Relative deadline in ns, counted from completion of the latest
    /// finishing predecessor.
    pub deadline: Option<u64>,
    /// Live qubits reloaded into the quantum register when this block
    /// starts; set when a quantum block is split and qubits cross the split.
    pub load: Vec<QubitId>,
}

impl Block {
    pub fn new(id: u32, btype: BlockType, instrs: Vec<Instruction>) -> Self {
        Block { id: BlockId(id), btype, instrs, deadline: None, load: Vec::new() }
    }

    pub fn gate_count(&self) -> usize {
        self.instrs.iter().filter(|i| i.is_gate()).count()
    }

    pub fn qubits(&self) -> BTreeSet<QubitId> {
        self.instrs.iter().flat_map(|i| i.qubits()).collect()
    }

    pub fn reads(&self) -> BTreeSet<Var> {
        self.instrs.iter().flat_map(|i| i.reads()).collect()
    }

    pub fn writes(&self) -> BTreeSet<Var> {
        self.instrs.iter().filter_map(|i| i.writes().cloned()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VarDecl {
    pub name: Var,
    /// Value known before execution (a constant chosen when the program
    /// was built).
    pub init: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub enum Precedence {
    /// Each block depends on the one before it.
    #[default]
    Linear,
    Edges(Vec<(BlockId, BlockId)>),
}

/// Inclusive, contiguous range of blocks executed without interleaving.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CriticalSection {
    pub first: BlockId,
    pub last: BlockId,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    pub name: String,
    pub node: NodeId,
    pub variables: Vec<VarDecl>,
    pub blocks: Vec<Block>,
    pub precedence: Precedence,
    pub critical_sections: Vec<CriticalSection>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("completed set is not downward-closed: block {block} completed before predecessor {missing}")]
    NotDownwardClosed { block: BlockId, missing: BlockId },
    #[error("unknown block id {0}")]
    UnknownBlock(BlockId),
    #[error("stochastic block {0}: QC duration depends on entanglement generation")]
    StochasticBlock(BlockId),
}

impl Program {
    pub fn new(name: impl Into<String>, node: impl Into<NodeId>) -> Self {
        Program {
            name: name.into(),
            node: node.into(),
            variables: Vec::new(),
            blocks: Vec::new(),
            precedence: Precedence::Linear,
            critical_sections: Vec::new(),
        }
    }

    pub fn declare(&mut self, name: &str, init: Option<f64>) -> Var {
        let v = Var::new(name);
        if let Some(d) = self.variables.iter_mut().find(|d| d.name == v) {
            d.init = init.or(d.init);
        } else {
            self.variables.push(VarDecl { name: v.clone(), init });
        }
        v
    }

    /// Appends a block with the next free id.
    pub fn push_block(&mut self, btype: BlockType, instrs: Vec<Instruction>) -> BlockId {
        let id = self.blocks.iter().map(|b| b.id.0).max().map_or(1, |m| m + 1);
        self.blocks.push(Block::new(id, btype, instrs));
        BlockId(id)
    }

    pub fn index_of(&self, id: BlockId) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    pub fn block(&self, id: BlockId) -> Option<&Block> {
        self.blocks.iter().find(|b| b.id == id)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.precedence, Precedence::Linear)
    }

    /// Direct predecessors of every block, by block index.
    pub fn predecessor_indices(&self) -> Vec<Vec<usize>> {
        match &self.precedence {
            Precedence::Linear => (0..self.blocks.len()).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect(),
            Precedence::Edges(edges) => {
                let mut preds = vec![Vec::new(); self.blocks.len()];
                for (a, b) in edges {
                    if let (Some(ia), Some(ib)) = (self.index_of(*a), self.index_of(*b)) {
                        if !preds[ib].contains(&ia) {
                            preds[ib].push(ia);
                        }
                    }
                }
                preds
            }
        }
    }

    /// Renumbers blocks 1..=n in list order. Only meaningful for linear
    /// programs, which is what the structural passes produce.
    pub fn renumber(&mut self) {
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.id = BlockId(i as u32 + 1);
        }
    }

    pub fn gate_count(&self) -> usize {
        self.blocks.iter().map(Block::gate_count).sum()
    }

    pub fn count_blocks(&self, t: BlockType) -> usize {
        self.blocks.iter().filter(|b| b.btype == t).count()
    }

    /// Largest number of simultaneously live qubits along block order.
    pub fn max_live_qubits(&self) -> usize {
        let mut live = BTreeSet::new();
        let mut peak = 0;
        for ins in self.blocks.iter().flat_map(|b| &b.instrs) {
            match ins {
                Instruction::QAlloc { qubit, .. } => {
                    live.insert(*qubit);
                }
                Instruction::EprRequest { qubits, .. } => live.extend(qubits.iter().copied()),
                Instruction::QMeasure { qubit, .. } | Instruction::QFree { qubit } => {
                    peak = peak.max(live.len());
                    live.remove(qubit);
                }
                _ => {}
            }
            peak = peak.max(live.len());
        }
        peak
    }
}

/// Blocks that are not yet completed and whose predecessors all are.
pub fn available_blocks(program: &Program, completed: &BTreeSet<BlockId>) -> Result<BTreeSet<BlockId>, IrError> {
    for id in completed {
        if program.index_of(*id).is_none() {
            return Err(IrError::UnknownBlock(*id));
        }
    }
    let preds = program.predecessor_indices();
    let done = |i: usize| completed.contains(&program.blocks[i].id);
    for (i, ps) in preds.iter().enumerate() {
        if done(i) {
            if let Some(&p) = ps.iter().find(|&&p| !done(p)) {
                return Err(IrError::NotDownwardClosed { block: program.blocks[i].id, missing: program.blocks[p].id });
            }
        }
    }
    Ok(preds
        .iter()
        .enumerate()
        .filter(|(i, ps)| !done(*i) && ps.iter().all(|&p| done(p)))
        .map(|(i, _)| program.blocks[i].id)
        .collect())
}

/// Deterministic part of one instruction's duration.
pub fn instruction_duration(ins: &Instruction, timing: &TimingParams) -> u64 {
    match ins {
        Instruction::ClassicalCompute { ops, .. } => *ops as u64 * timing.classical_instr_ns,
        Instruction::SendMsg { .. } => timing.classical_instr_ns,
        Instruction::RecvMsg { .. } => timing.classical_instr_ns + timing.recv_proc_ns,
        Instruction::QGate { gate, .. } => {
            let g = if gate.arity() == 2 { timing.gate_2q_ns } else { timing.gate_1q_ns };
            timing.quantum_instr_ns + g
        }
        Instruction::QAlloc { .. } | Instruction::QMeasure { .. } | Instruction::QFree { .. } => {
            timing.quantum_instr_ns
        }
        Instruction::EprRequest { .. } => 0,
    }
}

/// Processing time of a block, excluding scheduler dispatch overhead.
///
/// QC blocks have no deterministic duration: they return 0 unless
/// `expect_deterministic` is set, in which case they are an error.
pub fn estimate_block_duration(
    block: &Block,
    timing: &TimingParams,
    expect_deterministic: bool,
) -> Result<u64, IrError> {
    if block.btype == BlockType::QC && expect_deterministic {
        return Err(IrError::StochasticBlock(block.id));
    }
    let load = block.load.len() as u64 * timing.quantum_instr_ns;
    Ok(load + block.instrs.iter().map(|i| instruction_duration(i, timing)).sum::<u64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: u32) -> Program {
        let mut p = Program::new("chain", "n0");
        for _ in 0..n {
            p.push_block(BlockType::CL, vec![Instruction::ClassicalCompute { ops: 1, assign: None }]);
        }
        p
    }

    fn ids(v: &[u32]) -> BTreeSet<BlockId> {
        v.iter().map(|&i| BlockId(i)).collect()
    }

    #[test]
    fn chain_head_is_available() {
        let p = chain(3);
        assert_eq!(available_blocks(&p, &ids(&[])).unwrap(), ids(&[1]));
        assert_eq!(available_blocks(&p, &ids(&[1])).unwrap(), ids(&[2]));
        assert_eq!(available_blocks(&p, &ids(&[1, 2, 3])).unwrap(), ids(&[]));
    }

    #[test]
    fn diamond_branches_both_available() {
        let mut p = chain(4);
        p.precedence = Precedence::Edges(vec![
            (BlockId(1), BlockId(2)),
            (BlockId(1), BlockId(3)),
            (BlockId(2), BlockId(4)),
            (BlockId(3), BlockId(4)),
        ]);
        // brute force: a block is available iff every block with an edge into it is done
        let completed = ids(&[1]);
        let expected: BTreeSet<BlockId> = p
            .blocks
            .iter()
            .map(|b| b.id)
            .filter(|id| !completed.contains(id))
            .filter(|id| {
                let Precedence::Edges(e) = &p.precedence else { unreachable!() };
                e.iter().filter(|(_, to)| to == id).all(|(from, _)| completed.contains(from))
            })
            .collect();
        assert_eq!(expected, ids(&[2, 3]));
        assert_eq!(available_blocks(&p, &completed).unwrap(), expected);
        assert_eq!(available_blocks(&p, &ids(&[1, 2])).unwrap(), ids(&[3]));
    }

    #[test]
    fn not_downward_closed_is_rejected() {
        let p = chain(3);
        assert_eq!(
            available_blocks(&p, &ids(&[2])),
            Err(IrError::NotDownwardClosed { block: BlockId(2), missing: BlockId(1) })
        );
    }

    fn ql(instrs: Vec<Instruction>) -> Block {
        Block::new(1, BlockType::QL, instrs)
    }

    #[test]
    fn ql_duration_alloc_rotation_measure() {
        let b = ql(vec![
            Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ },
            Instruction::gate(Gate::RX(AngleExpr::constant(1.0)), &[0]),
            Instruction::QMeasure { qubit: QubitId(0), basis: Basis::Z, dest: Var::new("m") },
        ]);
        let d = estimate_block_duration(&b, &TimingParams::default(), false).unwrap();
        assert_eq!(d, 176_600);
    }

    #[test]
    fn cz_block_duration() {
        let b = ql(vec![Instruction::gate(Gate::CZ, &[0, 1])]);
        assert_eq!(estimate_block_duration(&b, &TimingParams::default(), false).unwrap(), 157_000);
    }

    #[test]
    fn cl_duration_is_op_count_times_instr() {
        let b = Block::new(1, BlockType::CL, vec![Instruction::ClassicalCompute { ops: 1, assign: None }]);
        assert_eq!(estimate_block_duration(&b, &TimingParams::default(), false).unwrap(), 15);
        let b = Block::new(1, BlockType::CL, vec![Instruction::ClassicalCompute { ops: 7, assign: None }]);
        assert_eq!(estimate_block_duration(&b, &TimingParams::default(), false).unwrap(), 105);
    }

    #[test]
    fn qc_duration_floor_and_error() {
        let b = Block::new(
            3,
            BlockType::QC,
            vec![Instruction::EprRequest { peer: "c".into(), count: 1, qubits: vec![QubitId(0)] }],
        );
        let t = TimingParams::default();
        assert_eq!(estimate_block_duration(&b, &t, false).unwrap(), 0);
        assert_eq!(estimate_block_duration(&b, &t, true), Err(IrError::StochasticBlock(BlockId(3))));
    }

    #[test]
    fn load_overhead_is_one_instruction_per_qubit() {
        let mut b = ql(vec![Instruction::gate(Gate::H, &[0])]);
        b.load = vec![QubitId(0)];
        let t = TimingParams::default();
        assert_eq!(estimate_block_duration(&b, &t, false).unwrap(), 50_000 + 76_600);
    }

    #[test]
    fn max_live_qubits_counts_overlap() {
        let mut p = Program::new("p", "n");
        p.push_block(
            BlockType::QL,
            vec![
                Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ },
                Instruction::QAlloc { qubit: QubitId(1), init: InitState::PlusZ },
                Instruction::QMeasure { qubit: QubitId(0), basis: Basis::Z, dest: Var::new("a") },
                Instruction::QAlloc { qubit: QubitId(2), init: InitState::PlusZ },
            ],
        );
        assert_eq!(p.max_live_qubits(), 2);
    }
}
