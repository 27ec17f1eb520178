//! Line-oriented text format for programs.
//!
//! ```text
//! # comment
//! PROGRAM rotation-server node=server
//! VAR theta1
//! VAR bias = 0.5
//! PRECEDENCE explicit        # optional; the default is the block chain
//! EDGE 1 2
//! CRITICAL 2 3
//! BLOCK 1 CC
//!   RECV client theta1
//! BLOCK 2 QL deadline=50000 load=q0
//!   QALLOC q0 +z
//!   GATE RX q0 theta1+-1*bias
//!   GATE CZ q0 q1
//!   MEASURE q0 Z m0
//!   QFREE q1
//! BLOCK 3 QC
//!   EPR client 1 q2
//! BLOCK 4 CL
//!   CL 3 corr = 3.141592653589793*m0
//!   SEND client corr
//! ```
//!
//! A block extends to the next `BLOCK` or `PROGRAM` line. Several programs
//! may share one file. Initial states are `+x -x +y -y +z -z` (`0` is
//! accepted for `+z`). Angle expressions are written without spaces.

use std::fmt::Write as _;

use super::*;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, msg: msg.into() })
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut progs = parse_programs(src)?;
    match progs.len() {
        1 => Ok(progs.pop().unwrap()),
        n => err(0, format!("expected exactly one program, found {n}")),
    }
}

pub fn parse_programs(src: &str) -> Result<Vec<Program>, ParseError> {
    let mut out: Vec<Program> = Vec::new();
    let mut edges: Option<Vec<(BlockId, BlockId)>> = None;

    let finish = |out: &mut Vec<Program>, edges: &mut Option<Vec<(BlockId, BlockId)>>| {
        if let (Some(p), Some(e)) = (out.last_mut(), edges.take()) {
            p.precedence = Precedence::Edges(e);
        }
    };

    for (idx, raw) in src.lines().enumerate() {
        let ln = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let kw = toks[0].to_ascii_uppercase();

        if kw == "PROGRAM" {
            finish(&mut out, &mut edges);
            let name = toks.get(1).ok_or(ParseError { line: ln, msg: "missing program name".into() })?;
            let node = toks
                .get(2)
                .and_then(|t| t.strip_prefix("node="))
                .ok_or(ParseError { line: ln, msg: "expected node=<id>".into() })?;
            out.push(Program::new(*name, node));
            continue;
        }
        let Some(prog) = out.last_mut() else {
            return err(ln, "content before PROGRAM header");
        };

        match kw.as_str() {
            "VAR" => {
                let name = toks.get(1).copied().unwrap_or("");
                if !Var::is_valid_name(name) {
                    return err(ln, format!("bad variable name `{name}`"));
                }
                let init = match toks.get(2..) {
                    Some(["=", v]) => Some(parse_f64(v, ln)?),
                    Some([]) | None => None,
                    _ => return err(ln, "expected VAR <name> [= <value>]"),
                };
                prog.declare(name, init);
            }
            "PRECEDENCE" => match toks.get(1).map(|s| s.to_ascii_lowercase()) {
                Some(s) if s == "explicit" => {
                    edges.get_or_insert_with(Vec::new);
                }
                Some(s) if s == "linear" => edges = None,
                _ => return err(ln, "expected PRECEDENCE explicit|linear"),
            },
            "EDGE" => {
                let (a, b) = two_ids(&toks, ln)?;
                match edges.as_mut() {
                    Some(e) => e.push((a, b)),
                    None => return err(ln, "EDGE requires PRECEDENCE explicit"),
                }
            }
            "CRITICAL" => {
                let (first, last) = two_ids(&toks, ln)?;
                prog.critical_sections.push(CriticalSection { first, last });
            }
            "BLOCK" => {
                if toks.len() < 3 {
                    return err(ln, "expected BLOCK <id> <type>");
                }
                let id = parse_u32(toks[1], ln)?;
                let btype = match toks[2].to_ascii_uppercase().as_str() {
                    "CL" => BlockType::CL,
                    "CC" => BlockType::CC,
                    "QL" => BlockType::QL,
                    "QC" => BlockType::QC,
                    other => return err(ln, format!("unknown block type `{other}`")),
                };
                let mut block = Block::new(id, btype, Vec::new());
                for attr in &toks[3..] {
                    if let Some(v) = attr.strip_prefix("deadline=") {
                        block.deadline =
                            Some(v.parse().map_err(|_| ParseError { line: ln, msg: format!("bad deadline `{v}`") })?);
                    } else if let Some(v) = attr.strip_prefix("load=") {
                        block.load = v
                            .split(',')
                            .filter(|s| !s.is_empty())
                            .map(|q| parse_qubit(q, ln))
                            .collect::<Result<_, _>>()?;
                    } else {
                        return err(ln, format!("unknown block attribute `{attr}`"));
                    }
                }
                prog.blocks.push(block);
            }
            _ => {
                let ins = parse_instruction(&toks, ln)?;
                match prog.blocks.last_mut() {
                    Some(b) => b.instrs.push(ins),
                    None => return err(ln, "instruction outside of a block"),
                }
            }
        }
    }
    finish(&mut out, &mut edges);
    Ok(out)
}

fn parse_instruction(toks: &[&str], ln: usize) -> Result<Instruction, ParseError> {
    let arg = |i: usize| -> Result<&str, ParseError> {
        toks.get(i).copied().ok_or(ParseError { line: ln, msg: format!("{}: missing operand", toks[0]) })
    };
    let var = |i: usize| -> Result<Var, ParseError> {
        let s = arg(i)?;
        if Var::is_valid_name(s) {
            Ok(Var::new(s))
        } else {
            err(ln, format!("bad variable name `{s}`"))
        }
    };
    let expr = |s: &str| AngleExpr::parse(s).map_err(|e| ParseError { line: ln, msg: e.to_string() });

    Ok(match toks[0].to_ascii_uppercase().as_str() {
        "CL" => {
            let ops = parse_u32(arg(1)?, ln)?;
            let assign = match toks.get(2..) {
                Some([]) | None => None,
                Some([dest, "=", rest @ ..]) if !rest.is_empty() => {
                    if !Var::is_valid_name(dest) {
                        return err(ln, format!("bad variable name `{dest}`"));
                    }
                    Some((Var::new(dest), expr(&rest.concat())?))
                }
                _ => return err(ln, "expected CL <ops> [<dest> = <expr>]"),
            };
            Instruction::ClassicalCompute { ops, assign }
        }
        "SEND" => Instruction::SendMsg { peer: NodeId::new(arg(1)?), payload: var(2)? },
        "RECV" => Instruction::RecvMsg { peer: NodeId::new(arg(1)?), dest: var(2)? },
        "QALLOC" => {
            let qubit = parse_qubit(arg(1)?, ln)?;
            let init = match toks.get(2) {
                None => InitState::PlusZ,
                Some(s) => {
                    InitState::from_token(s).ok_or(ParseError { line: ln, msg: format!("bad initial state `{s}`") })?
                }
            };
            Instruction::QAlloc { qubit, init }
        }
        "GATE" => {
            let name = arg(1)?.to_ascii_uppercase();
            let (gate, nq) = match name.as_str() {
                "X" => (Gate::X, 1),
                "Z" => (Gate::Z, 1),
                "H" => (Gate::H, 1),
                "CZ" => (Gate::CZ, 2),
                "RX" | "RY" | "RZ" => {
                    let e = expr(&toks.get(3..).unwrap_or(&[]).concat())?;
                    let g = match name.as_str() {
                        "RX" => Gate::RX(e),
                        "RY" => Gate::RY(e),
                        _ => Gate::RZ(e),
                    };
                    (g, 1)
                }
                other => return err(ln, format!("unsupported gate `{other}`")),
            };
            let qubits = (0..nq).map(|i| parse_qubit(arg(2 + i)?, ln)).collect::<Result<_, _>>()?;
            if !gate.is_rotation() && toks.len() != 2 + nq {
                return err(ln, "trailing operands after gate");
            }
            Instruction::QGate { gate, qubits }
        }
        "MEASURE" => {
            let qubit = parse_qubit(arg(1)?, ln)?;
            let basis = match arg(2)?.to_ascii_uppercase().as_str() {
                "X" => Basis::X,
                "Y" => Basis::Y,
                "Z" => Basis::Z,
                other => return err(ln, format!("bad basis `{other}`")),
            };
            Instruction::QMeasure { qubit, basis, dest: var(3)? }
        }
        "QFREE" => Instruction::QFree { qubit: parse_qubit(arg(1)?, ln)? },
        "EPR" => {
            let peer = NodeId::new(arg(1)?);
            let count = parse_u32(arg(2)?, ln)?;
            let qubits = toks[3..].iter().map(|q| parse_qubit(q, ln)).collect::<Result<_, _>>()?;
            Instruction::EprRequest { peer, count, qubits }
        }
        other => return err(ln, format!("unknown instruction `{other}`")),
    })
}

fn parse_u32(s: &str, ln: usize) -> Result<u32, ParseError> {
    s.parse().map_err(|_| ParseError { line: ln, msg: format!("expected integer, got `{s}`") })
}

fn parse_f64(s: &str, ln: usize) -> Result<f64, ParseError> {
    s.parse().map_err(|_| ParseError { line: ln, msg: format!("expected number, got `{s}`") })
}

fn parse_qubit(s: &str, ln: usize) -> Result<QubitId, ParseError> {
    s.strip_prefix('q')
        .and_then(|n| n.parse().ok())
        .map(QubitId)
        .ok_or(ParseError { line: ln, msg: format!("bad qubit `{s}`") })
}

fn two_ids(toks: &[&str], ln: usize) -> Result<(BlockId, BlockId), ParseError> {
    if toks.len() != 3 {
        return err(ln, format!("expected {} <a> <b>", toks[0]));
    }
    Ok((BlockId(parse_u32(toks[1], ln)?), BlockId(parse_u32(toks[2], ln)?)))
}

pub fn write_program(p: &Program) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "PROGRAM {} node={}", p.name, p.node);
    for v in &p.variables {
        match v.init {
            Some(x) => writeln!(s, "VAR {} = {}", v.name, x),
            None => writeln!(s, "VAR {}", v.name),
        }
        .unwrap();
    }
    if let Precedence::Edges(edges) = &p.precedence {
        s.push_str("PRECEDENCE explicit\n");
        for (a, b) in edges {
            let _ = writeln!(s, "EDGE {a} {b}");
        }
    }
    for cs in &p.critical_sections {
        let _ = writeln!(s, "CRITICAL {} {}", cs.first, cs.last);
    }
    for b in &p.blocks {
        let _ = write!(s, "BLOCK {} {}", b.id, b.btype);
        if let Some(d) = b.deadline {
            let _ = write!(s, " deadline={d}");
        }
        if !b.load.is_empty() {
            let qs: Vec<String> = b.load.iter().map(|q| q.to_string()).collect();
            let _ = write!(s, " load={}", qs.join(","));
        }
        s.push('\n');
        for ins in &b.instrs {
            s.push_str("  ");
            write_instruction(&mut s, ins);
            s.push('\n');
        }
    }
    s
}

pub fn write_programs(ps: &[Program]) -> String {
    ps.iter().map(write_program).collect::<Vec<_>>().join("\n")
}

fn write_instruction(s: &mut String, ins: &Instruction) {
    let _ = match ins {
        Instruction::ClassicalCompute { ops, assign: None } => write!(s, "CL {ops}"),
        Instruction::ClassicalCompute { ops, assign: Some((v, e)) } => write!(s, "CL {ops} {v} = {e}"),
        Instruction::SendMsg { peer, payload } => write!(s, "SEND {peer} {payload}"),
        Instruction::RecvMsg { peer, dest } => write!(s, "RECV {peer} {dest}"),
        Instruction::QAlloc { qubit, init } => write!(s, "QALLOC {qubit} {init}"),
        Instruction::QGate { gate, qubits } => {
            let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
            match gate.angle() {
                Some(e) => write!(s, "GATE {} {} {e}", gate.name(), qs.join(" ")),
                None => write!(s, "GATE {} {}", gate.name(), qs.join(" ")),
            }
        }
        Instruction::QMeasure { qubit, basis, dest } => write!(s, "MEASURE {qubit} {basis} {dest}"),
        Instruction::QFree { qubit } => write!(s, "QFREE {qubit}"),
        Instruction::EprRequest { peer, count, qubits } => {
            let qs: Vec<String> = qubits.iter().map(|q| q.to_string()).collect();
            write!(s, "EPR {peer} {count} {}", qs.join(" "))
        }
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# rotation server, optimized
PROGRAM rot node=server
VAR theta1
VAR theta2
BLOCK 1 CC
  RECV client theta1
BLOCK 2 CC
  RECV client theta2
BLOCK 3 QL deadline=50000
  QALLOC q0 +x
  GATE RX q0 theta1+theta2
  MEASURE q0 X m
";

    #[test]
    fn parses_sample() {
        let p = parse_program(SAMPLE).unwrap();
        assert_eq!(p.name, "rot");
        assert_eq!(p.node.as_str(), "server");
        assert_eq!(p.blocks.len(), 3);
        assert_eq!(p.blocks[2].deadline, Some(50_000));
        assert_eq!(p.blocks[2].instrs.len(), 3);
        assert!(p.is_linear());
    }

    #[test]
    fn round_trip_is_lossless() {
        let p = parse_program(SAMPLE).unwrap();
        let text = write_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p);
        assert_eq!(write_program(&parse_program(&text).unwrap()), text);
    }

    #[test]
    fn explicit_precedence_and_critical_sections() {
        let src = "PROGRAM d node=a\nPRECEDENCE explicit\nEDGE 1 2\nEDGE 1 3\nCRITICAL 2 3\n\
                   BLOCK 1 CL\n CL 1\nBLOCK 2 CL\n CL 2 x = 1.5\nBLOCK 3 QC\n EPR b 2 q0 q1\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.precedence, Precedence::Edges(vec![(BlockId(1), BlockId(2)), (BlockId(1), BlockId(3))]));
        assert_eq!(p.critical_sections, vec![CriticalSection { first: BlockId(2), last: BlockId(3) }]);
        assert_eq!(parse_program(&write_program(&p)).unwrap(), p);
    }

    #[test]
    fn load_attribute_round_trips() {
        let src = "PROGRAM l node=a\nBLOCK 1 QL load=q0,q3\n GATE H q0\n";
        let p = parse_program(src).unwrap();
        assert_eq!(p.blocks[0].load, vec![QubitId(0), QubitId(3)]);
        assert_eq!(parse_program(&write_program(&p)).unwrap(), p);
    }

    #[test]
    fn multiple_programs() {
        let two = format!("{SAMPLE}\n{}", SAMPLE.replace("rot", "rot2"));
        let ps = parse_programs(&two).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(parse_programs(&write_programs(&ps)).unwrap(), ps);
        assert!(parse_program(&two).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_program("PROGRAM p node=a\nBLOCK 1 QL\n  GATE T q0\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_program("BLOCK 1 QL\n").unwrap_err();
        assert_eq!(e.line, 1);
        assert!(parse_program("PROGRAM p node=a\nBLOCK 1 XX\n").is_err());
        assert!(parse_program("PROGRAM p node=a\nBLOCK 1 QL\n MEASURE q0 W m\n").is_err());
    }
}
