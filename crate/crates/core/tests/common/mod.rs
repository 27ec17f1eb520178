//! Noiseless reference interpreter that enumerates every measurement
//! branch of a set of communicating programs.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use qoalac::ir::{BlockType, Instruction, Program, QubitId, Var};
use qoalac::quantum::{NoiseModel, QubitStore};

/// Distribution over the joint assignment of every measured variable,
/// keyed by `program/var`.
pub type Outcomes = BTreeMap<Vec<(String, u8)>, f64>;

#[derive(Clone)]
struct ProgState {
    pc: usize,
    ip: usize,
    vars: BTreeMap<Var, f64>,
    qmap: BTreeMap<QubitId, u32>,
    inbox: BTreeMap<usize, VecDeque<f64>>,
    measured: BTreeMap<Var, u8>,
}

#[derive(Clone)]
struct State {
    progs: Vec<ProgState>,
    store: QubitStore,
    next_key: u32,
}

struct Ctx<'a> {
    programs: &'a [Program],
    noise: NoiseModel,
}

impl Ctx<'_> {
    fn peer(&self, name: &qoalac::ir::NodeId) -> usize {
        self.programs.iter().position(|p| &p.node == name).unwrap_or_else(|| panic!("no program on {name}"))
    }

    fn ready(&self, s: &State, i: usize) -> bool {
        let p = &self.programs[i];
        let ps = &s.progs[i];
        let Some(b) = p.blocks.get(ps.pc) else {
            return false;
        };
        if ps.ip > 0 {
            return true;
        }
        match b.btype {
            BlockType::QC => {
                let Instruction::EprRequest { peer, .. } = &b.instrs[0] else { panic!("QC without request") };
                let j = self.peer(peer);
                let other = &self.programs[j];
                let Some(ob) = other.blocks.get(s.progs[j].pc) else {
                    return false;
                };
                ob.btype == BlockType::QC
                    && matches!(&ob.instrs[0], Instruction::EprRequest { peer, .. } if *peer == p.node)
            }
            _ => {
                let mut need: BTreeMap<usize, usize> = BTreeMap::new();
                for ins in &b.instrs {
                    if let Instruction::RecvMsg { peer, .. } = ins {
                        *need.entry(self.peer(peer)).or_default() += 1;
                    }
                }
                need.iter().all(|(from, n)| ps.inbox.get(from).map_or(0, VecDeque::len) >= *n)
            }
        }
    }

    fn run(&self, mut s: State, prob: f64, out: &mut Outcomes) {
        loop {
            let Some(i) = (0..self.programs.len()).find(|&i| self.ready(&s, i)) else {
                let done = s.progs.iter().zip(self.programs).all(|(ps, p)| ps.pc == p.blocks.len());
                assert!(done, "reference interpreter deadlocked");
                let key: Vec<(String, u8)> = s
                    .progs
                    .iter()
                    .zip(self.programs)
                    .flat_map(|(ps, p)| ps.measured.iter().map(move |(v, &b)| (format!("{}/{v}", p.name), b)))
                    .collect();
                *out.entry(key).or_default() += prob;
                return;
            };
            let block = &self.programs[i].blocks[s.progs[i].pc];
            if block.btype == BlockType::QC {
                let Instruction::EprRequest { peer, count, qubits } = &block.instrs[0] else { unreachable!() };
                let j = self.peer(peer);
                let Instruction::EprRequest { qubits: other, .. } = &self.programs[j].blocks[s.progs[j].pc].instrs[0]
                else {
                    unreachable!()
                };
                for k in 0..*count as usize {
                    let (a, b) = (s.next_key, s.next_key + 1);
                    s.next_key += 2;
                    s.store.add_pair(a, b, 1.0).unwrap();
                    s.progs[i].qmap.insert(qubits[k], a);
                    s.progs[j].qmap.insert(other[k], b);
                }
                s.progs[i].pc += 1;
                s.progs[j].pc += 1;
                continue;
            }
            while s.progs[i].ip < block.instrs.len() {
                let ins = &block.instrs[s.progs[i].ip];
                s.progs[i].ip += 1;
                if let Instruction::QMeasure { qubit, basis, dest } = ins {
                    let key = s.progs[i].qmap[qubit];
                    for bit in [0u8, 1] {
                        let mut b = s.clone();
                        let p = b.store.collapse(key, *basis, bit).unwrap();
                        if p < 1e-12 {
                            continue;
                        }
                        b.progs[i].qmap.remove(qubit);
                        b.progs[i].vars.insert(dest.clone(), f64::from(bit));
                        b.progs[i].measured.insert(dest.clone(), bit);
                        self.run(b, prob * p, out);
                    }
                    return;
                }
                self.exec(&mut s, i, ins);
            }
            s.progs[i].pc += 1;
            s.progs[i].ip = 0;
        }
    }

    fn exec(&self, s: &mut State, i: usize, ins: &Instruction) {
        let prog = &self.programs[i];
        match ins {
            Instruction::ClassicalCompute { assign, .. } => {
                if let Some((v, e)) = assign {
                    let x = e.eval(|name| s.progs[i].vars.get(name).copied()).unwrap();
                    s.progs[i].vars.insert(v.clone(), x);
                }
            }
            Instruction::SendMsg { peer, payload } => {
                let x = s.progs[i].vars[payload];
                let j = self.peer(peer);
                s.progs[j].inbox.entry(i).or_default().push_back(x);
            }
            Instruction::RecvMsg { peer, dest } => {
                let j = self.peer(peer);
                let x = s.progs[i].inbox.get_mut(&j).and_then(VecDeque::pop_front).expect("checked ready");
                s.progs[i].vars.insert(dest.clone(), x);
            }
            Instruction::QAlloc { qubit, init } => {
                let k = s.next_key;
                s.next_key += 1;
                s.store.alloc(k, *init).unwrap();
                s.progs[i].qmap.insert(*qubit, k);
            }
            Instruction::QGate { gate, qubits } => {
                let angle = gate.angle().map_or(0.0, |e| e.eval(|n| s.progs[i].vars.get(n).copied()).unwrap());
                let keys: Vec<u32> = qubits.iter().map(|q| s.progs[i].qmap[q]).collect();
                s.store.apply_gate(gate, angle, &keys, &self.noise).unwrap();
            }
            Instruction::QFree { qubit } => {
                let k = s.progs[i].qmap.remove(qubit).unwrap();
                s.store.free(k).unwrap();
            }
            Instruction::QMeasure { .. } | Instruction::EprRequest { .. } => {
                unreachable!("handled by the caller in {}", prog.name)
            }
        }
    }
}

/// Enumerates all measurement branches of `programs`, which must be linear
/// and run on distinct nodes. Programs run in a fixed order whenever they
/// can; without noise the order does not change the distribution.
pub fn enumerate_outcomes(programs: &[Program]) -> Outcomes {
    assert!(programs.iter().all(Program::is_linear));
    let progs = programs
        .iter()
        .map(|p| ProgState {
            pc: 0,
            ip: 0,
            vars: p.variables.iter().filter_map(|d| Some((d.name.clone(), d.init?))).collect(),
            qmap: BTreeMap::new(),
            inbox: BTreeMap::new(),
            measured: BTreeMap::new(),
        })
        .collect();
    let ctx = Ctx { programs, noise: NoiseModel::noiseless() };
    let mut out = Outcomes::new();
    ctx.run(State { progs, store: QubitStore::new(), next_key: 0 }, 1.0, &mut out);
    out
}

/// Largest absolute probability difference over the union of outcomes.
pub fn distance(a: &Outcomes, b: &Outcomes) -> f64 {
    a.keys().chain(b.keys()).map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs()).fold(0.0, f64::max)
}

use qoalac::compiler::{compile, parse_pipeline, CompileError};
use qoalac::experiments::{build_bqc_app, build_rotation_app, build_scenario1_local, build_scenario2_local, LocalGate};
use qoalac::ir::{InitState, NodeId};
use qoalac::TimingParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const PIPELINES: &[&str] = &[
    "hybrid",
    "block-selfish",
    "block-coop:1",
    "block-coop:2",
    "block-coop:8",
    "deadline-free",
    "deadline-selfish",
    "deadline-coop:100",
    "critical",
    "hybrid+block-selfish",
    "hybrid+block-coop:1",
    "hybrid+block-selfish+deadline-coop:100",
    "hybrid+block-selfish+critical",
];

/// Every small application the experiments use: (label, programs).
pub fn paper_programs() -> Vec<(String, Vec<Program>)> {
    let (c, s) = (NodeId::from("client"), NodeId::from("server"));
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=4 {
        for init in InitState::ALL {
            let a = build_rotation_app(n, false, init, &c, &s, &mut rng);
            out.push((format!("rotation n={n} {init}"), vec![a.client, a.server]));
        }
    }
    for n in 1..=3 {
        for k in 0..4 {
            let a = build_bqc_app(n, false, &c, &s, &mut rng);
            out.push((format!("bqc n={n} #{k}"), vec![a.client, a.server]));
        }
    }
    out.push(("local scenario 1".into(), vec![build_scenario1_local(3, 8, LocalGate::H).0]));
    out.push(("local scenario 2".into(), vec![build_scenario2_local(2, 8).0]));
    out
}

/// Compiles every program with `pipeline`, leaving programs the pipeline
/// does not apply to unchanged.
pub fn compile_all(programs: &[Program], pipeline: &str) -> Vec<Program> {
    let pipe = parse_pipeline(pipeline).unwrap();
    programs
        .iter()
        .map(|p| match compile(p, &pipe, &TimingParams::default()) {
            Ok(q) => q,
            Err(CompileError::NotApplicable(_)) => p.clone(),
            Err(e) => panic!("{pipeline} on {}: {e}", p.name),
        })
        .collect()
}

/// Worst distribution distance between baseline and compiled programs over
/// all paper programs and pipelines, where it occurs, and the number of
/// comparisons made.
pub fn semantic_preservation() -> (f64, String, usize) {
    let (mut worst, mut at, mut count) = (0.0f64, String::from("-"), 0);
    for (label, progs) in paper_programs() {
        let base = enumerate_outcomes(&progs);
        let total: f64 = base.values().sum();
        assert!((total - 1.0).abs() < 1e-9, "{label}: probabilities sum to {total}");
        for pipe in PIPELINES {
            let d = distance(&base, &enumerate_outcomes(&compile_all(&progs, pipe)));
            count += 1;
            if d > worst {
                worst = d;
                at = format!("{label} / {pipe}");
            }
        }
    }
    (worst, at, count)
}
