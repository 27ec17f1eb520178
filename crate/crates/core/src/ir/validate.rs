use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    EmptyBlock,
    InstructionType,
    DuplicateBlockId,
    BadDeadline,
    UnknownBlock,
    PrecedenceCycle,
    NotTopological,
    CriticalSection,
    UndefinedVariable,
    UseBeforeAllocation,
    UseAfterFree,
    DoubleAllocation,
    BadOperands,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::EmptyBlock => "empty block",
            Rule::InstructionType => "instruction not allowed in block type",
            Rule::DuplicateBlockId => "duplicate block id",
            Rule::BadDeadline => "non-positive deadline",
            Rule::UnknownBlock => "unknown block reference",
            Rule::PrecedenceCycle => "precedence cycle",
            Rule::NotTopological => "block order is not a topological order",
            Rule::CriticalSection => "malformed critical section",
            Rule::UndefinedVariable => "variable read before write",
            Rule::UseBeforeAllocation => "use before allocation",
            Rule::UseAfterFree => "use after free",
            Rule::DoubleAllocation => "double allocation",
            Rule::BadOperands => "bad operands",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// `None` for program-level rules.
    pub block: Option<BlockId>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.block {
            Some(b) => write!(f, "block {b}: {}: {}", self.rule, self.detail),
            None => write!(f, "{}: {}", self.rule, self.detail),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, block: Option<BlockId>, rule: Rule, detail: impl Into<String>) {
        self.violations.push(Violation { block, rule, detail: detail.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(p: &Program) -> ValidationReport {
    let mut r = ValidationReport::default();
    check_blocks(p, &mut r);
    let graph_ok = check_precedence(p, &mut r);
    check_critical_sections(p, &mut r);
    if graph_ok {
        check_variables(p, &mut r);
    }
    check_qubits(p, &mut r);
    r
}

fn check_blocks(p: &Program, r: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for b in &p.blocks {
        let id = Some(b.id);
        if !seen.insert(b.id) {
            r.push(id, Rule::DuplicateBlockId, format!("id {} reused", b.id));
        }
        if b.instrs.is_empty() {
            r.push(id, Rule::EmptyBlock, "no instructions");
        }
        if b.deadline == Some(0) {
            r.push(id, Rule::BadDeadline, "deadline must be positive");
        }
        if !b.load.is_empty() && b.btype != BlockType::QL {
            r.push(id, Rule::InstructionType, "only QL blocks load qubits");
        }
        for ins in &b.instrs {
            let allowed = match b.btype {
                BlockType::CL => matches!(ins, Instruction::ClassicalCompute { .. }),
                BlockType::CC => ins.is_classical(),
                BlockType::QL => !ins.is_classical() && !matches!(ins, Instruction::EprRequest { .. }),
                BlockType::QC => matches!(ins, Instruction::EprRequest { .. }),
            };
            if !allowed {
                r.push(id, Rule::InstructionType, format!("{ins:?} in {} block", b.btype));
            }
            match ins {
                Instruction::ClassicalCompute { ops: 0, .. } => {
                    r.push(id, Rule::BadOperands, "op count must be positive")
                }
                Instruction::QGate { gate, qubits } => {
                    let distinct: BTreeSet<_> = qubits.iter().collect();
                    if qubits.len() != gate.arity() || distinct.len() != qubits.len() {
                        r.push(id, Rule::BadOperands, format!("{} on {qubits:?}", gate.name()));
                    }
                }
                Instruction::EprRequest { count, qubits, .. } => {
                    if *count == 0 || qubits.len() != *count as usize {
                        r.push(id, Rule::BadOperands, format!("EPR count {count} with {} qubits", qubits.len()));
                    }
                }
                _ => {}
            }
        }
    }
}

/// Returns true when the graph is usable for dependency analysis.
fn check_precedence(p: &Program, r: &mut ValidationReport) -> bool {
    let Precedence::Edges(edges) = &p.precedence else {
        return true;
    };
    let mut ok = true;
    for (a, b) in edges {
        for x in [a, b] {
            if p.index_of(*x).is_none() {
                r.push(None, Rule::UnknownBlock, format!("edge {a}->{b} references {x}"));
                ok = false;
            }
        }
    }
    if !ok {
        return false;
    }
    // Kahn's algorithm over block indices.
    let preds = p.predecessor_indices();
    let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut succs = vec![Vec::new(); p.blocks.len()];
    for (i, ps) in preds.iter().enumerate() {
        for &q in ps {
            succs[q].push(i);
        }
    }
    let mut ready: Vec<usize> = (0..indeg.len()).filter(|&i| indeg[i] == 0).collect();
    let mut visited = 0;
    while let Some(i) = ready.pop() {
        visited += 1;
        for &s in &succs[i] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                ready.push(s);
            }
        }
    }
    if visited != p.blocks.len() {
        r.push(None, Rule::PrecedenceCycle, "precedence graph has a cycle");
        return false;
    }
    for (a, b) in edges {
        if p.index_of(*a) >= p.index_of(*b) {
            r.push(Some(*b), Rule::NotTopological, format!("edge {a}->{b} points backwards"));
            ok = false;
        }
    }
    ok
}

fn check_critical_sections(p: &Program, r: &mut ValidationReport) {
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for cs in &p.critical_sections {
        let (Some(i), Some(j)) = (p.index_of(cs.first), p.index_of(cs.last)) else {
            r.push(None, Rule::CriticalSection, format!("section {}..{} references unknown block", cs.first, cs.last));
            continue;
        };
        if i > j {
            r.push(Some(cs.first), Rule::CriticalSection, format!("section {}..{} is reversed", cs.first, cs.last));
            continue;
        }
        if (i..=j).any(|k| covered.contains(&k)) {
            r.push(
                Some(cs.first),
                Rule::CriticalSection,
                format!("section {}..{} overlaps another", cs.first, cs.last),
            );
        }
        covered.extend(i..=j);
    }
}

/// Ancestor sets by block index (transitive closure of precedence).
fn ancestors(p: &Program) -> Vec<BTreeSet<usize>> {
    let preds = p.predecessor_indices();
    let mut anc: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); p.blocks.len()];
    // block order is topological once check_precedence passed
    for i in 0..p.blocks.len() {
        let mut s = BTreeSet::new();
        for &q in &preds[i] {
            s.insert(q);
            s.extend(anc[q].iter().copied());
        }
        anc[i] = s;
    }
    anc
}

fn check_variables(p: &Program, r: &mut ValidationReport) {
    let preset: BTreeSet<&Var> = p.variables.iter().filter(|v| v.init.is_some()).map(|v| &v.name).collect();
    let anc = ancestors(p);
    let mut written_in: Vec<BTreeSet<Var>> = Vec::with_capacity(p.blocks.len());
    for (i, b) in p.blocks.iter().enumerate() {
        let mut local: BTreeSet<Var> = BTreeSet::new();
        for ins in &b.instrs {
            for v in ins.reads() {
                let defined =
                    preset.contains(&v) || local.contains(&v) || anc[i].iter().any(|&a| written_in[a].contains(&v));
                if !defined {
                    r.push(Some(b.id), Rule::UndefinedVariable, format!("`{v}`"));
                }
            }
            if let Some(w) = ins.writes() {
                local.insert(w.clone());
            }
        }
        written_in.push(local);
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Life {
    Live,
    Freed,
}

fn check_qubits(p: &Program, r: &mut ValidationReport) {
    let mut state: BTreeMap<QubitId, Life> = BTreeMap::new();
    for b in &p.blocks {
        let id = Some(b.id);
        for q in &b.load {
            if state.get(q) != Some(&Life::Live) {
                r.push(id, Rule::UseBeforeAllocation, format!("load of {q}"));
            }
        }
        for ins in &b.instrs {
            match ins {
                Instruction::QAlloc { qubit, .. } => alloc(&mut state, *qubit, id, r),
                Instruction::EprRequest { qubits, .. } => {
                    for q in qubits {
                        alloc(&mut state, *q, id, r);
                    }
                }
                Instruction::QGate { qubits, .. } => {
                    for q in qubits {
                        use_qubit(&state, *q, id, r);
                    }
                }
                Instruction::QMeasure { qubit, .. } | Instruction::QFree { qubit } => {
                    use_qubit(&state, *qubit, id, r);
                    state.insert(*qubit, Life::Freed);
                }
                _ => {}
            }
        }
    }
}

fn alloc(state: &mut BTreeMap<QubitId, Life>, q: QubitId, id: Option<BlockId>, r: &mut ValidationReport) {
    if state.get(&q) == Some(&Life::Live) {
        r.push(id, Rule::DoubleAllocation, format!("{q} is already live"));
    }
    state.insert(q, Life::Live);
}

fn use_qubit(state: &BTreeMap<QubitId, Life>, q: QubitId, id: Option<BlockId>, r: &mut ValidationReport) {
    match state.get(&q) {
        Some(Life::Live) => {}
        Some(Life::Freed) => r.push(id, Rule::UseAfterFree, format!("{q}")),
        None => r.push(id, Rule::UseBeforeAllocation, format!("{q}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation_server_optimized() -> Program {
        parse_program(
            "PROGRAM s node=server\nBLOCK 1 CC\n RECV client t1\nBLOCK 2 CC\n RECV client t2\n\
             BLOCK 3 QL\n QALLOC q0 +z\n GATE RX q0 t1+t2\n MEASURE q0 Z m\n",
        )
        .unwrap()
    }

    #[test]
    fn optimized_rotation_server_is_valid() {
        let r = validate(&rotation_server_optimized());
        assert!(r.is_ok(), "{r}");
    }

    #[test]
    fn empty_block_is_reported() {
        let mut p = Program::new("e", "n");
        p.push_block(BlockType::CL, vec![]);
        let r = validate(&p);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].rule, Rule::EmptyBlock);
        assert_eq!(r.violations[0].block, Some(BlockId(1)));
        assert_eq!(r.violations[0].rule.name(), "empty block");
    }

    #[test]
    fn measure_before_alloc_is_reported() {
        let p = parse_program("PROGRAM p node=n\nBLOCK 1 QL\n MEASURE q0 Z m\nBLOCK 2 QL\n QALLOC q0 +z\n QFREE q0\n")
            .unwrap();
        let r = validate(&p);
        assert!(r.has(Rule::UseBeforeAllocation));
        assert_eq!(r.violations[0].block, Some(BlockId(1)));
        assert_eq!(Rule::UseBeforeAllocation.name(), "use before allocation");
    }

    #[test]
    fn gate_after_measure_is_use_after_free() {
        let p = parse_program("PROGRAM p node=n\nBLOCK 1 QL\n QALLOC q0\n MEASURE q0 Z m\n GATE X q0\n").unwrap();
        assert!(validate(&p).has(Rule::UseAfterFree));
    }

    #[test]
    fn reallocation_after_measure_is_fine() {
        let p =
            parse_program("PROGRAM p node=n\nBLOCK 1 QL\n QALLOC q0\n MEASURE q0 Z a\n QALLOC q0\n MEASURE q0 Z b\n")
                .unwrap();
        assert!(validate(&p).is_ok());
    }

    #[test]
    fn read_before_write() {
        let p = parse_program("PROGRAM p node=n\nBLOCK 1 CC\n SEND x v\nBLOCK 2 CC\n RECV x v\n").unwrap();
        assert!(validate(&p).has(Rule::UndefinedVariable));
        let p = parse_program("PROGRAM p node=n\nVAR v = 1\nBLOCK 1 CC\n SEND x v\n").unwrap();
        assert!(validate(&p).is_ok());
    }

    #[test]
    fn sibling_write_does_not_define() {
        // 1 -> {2, 3}: 2 writes v, 3 reads v; not ordered in every topological order
        let p = parse_program(
            "PROGRAM p node=n\nPRECEDENCE explicit\nEDGE 1 2\nEDGE 1 3\n\
             BLOCK 1 CL\n CL 1\nBLOCK 2 CL\n CL 1 v = 1\nBLOCK 3 CL\n CL 1 w = v\n",
        )
        .unwrap();
        assert!(validate(&p).has(Rule::UndefinedVariable));
    }

    #[test]
    fn wrong_instruction_type() {
        let p = parse_program("PROGRAM p node=n\nBLOCK 1 CL\n SEND x v\n").unwrap();
        assert!(validate(&p).has(Rule::InstructionType));
        let p = parse_program("PROGRAM p node=n\nBLOCK 1 QC\n QALLOC q0\n").unwrap();
        assert!(validate(&p).has(Rule::InstructionType));
    }

    #[test]
    fn cycle_detected() {
        let p = parse_program(
            "PROGRAM p node=n\nPRECEDENCE explicit\nEDGE 1 2\nEDGE 2 1\nBLOCK 1 CL\n CL 1\nBLOCK 2 CL\n CL 1\n",
        )
        .unwrap();
        assert!(validate(&p).has(Rule::PrecedenceCycle));
    }

    #[test]
    fn overlapping_sections() {
        let mut p = rotation_server_optimized();
        p.critical_sections = vec![
            CriticalSection { first: BlockId(1), last: BlockId(2) },
            CriticalSection { first: BlockId(2), last: BlockId(3) },
        ];
        assert!(validate(&p).has(Rule::CriticalSection));
    }

    #[test]
    fn bad_gate_arity() {
        let mut p = Program::new("p", "n");
        p.push_block(
            BlockType::QL,
            vec![
                Instruction::QAlloc { qubit: QubitId(0), init: InitState::PlusZ },
                Instruction::gate(Gate::CZ, &[0, 0]),
            ],
        );
        assert!(validate(&p).has(Rule::BadOperands));
    }
}
