use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::edf::{edf_select, Candidate};
use super::trace::{EventKind, InstanceReport, Proc, Trace, TraceEvent};
use super::{InstanceSpec, NetworkConfig, NodeConfig, SimError, SimOptions};
use crate::ir::{instruction_duration, validate, AngleExpr, BlockType, Instruction, NodeId, QubitId, Var};
use crate::network::{sample_epr, EprOutcome};
use crate::quantum::QubitStore;

/// Store keys are `node << NODE_SHIFT | physical index`.
const NODE_SHIFT: u32 = 16;
/// QC yields in a row without any block completing before the run is
/// declared stuck (a QC block whose peer never asks for the pair).
const MAX_STALLED_YIELDS: u64 = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Wake,
    Done { inst: usize, bi: usize },
    QcResult { a: usize, b: usize, success: bool },
    QcBinEnd { inst: usize, epoch: u64 },
}

struct QcState {
    bi: usize,
    ready_ns: u64,
    work_start: u64,
    generating: bool,
}

struct Inst<'a> {
    spec: &'a InstanceSpec,
    node: usize,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    done: Vec<bool>,
    end_time: Vec<u64>,
    /// Blocks whose predecessors are done and that are not running, with
    /// the time they became ready.
    ready: BTreeMap<usize, u64>,
    remaining: usize,
    vars: BTreeMap<Var, f64>,
    qmap: BTreeMap<QubitId, u32>,
    /// Messages from each sender instance, in send order: (arrival, value).
    inbox: BTreeMap<usize, VecDeque<(u64, f64)>>,
    routes: BTreeMap<NodeId, usize>,
    recv_needs: Vec<Vec<(usize, usize)>>,
    sections: Vec<(usize, usize)>,
    qc: Option<QcState>,
    qc_delivered: BTreeMap<usize, u32>,
    epoch: u64,
    first_start: Option<u64>,
    last_end: u64,
}

struct NodeState<'a> {
    cfg: &'a NodeConfig,
    cps: Option<(usize, usize)>,
    qps: Option<(usize, usize)>,
    lock: Option<usize>,
    free_phys: BTreeSet<u32>,
    instances: Vec<usize>,
}

struct Sim<'a> {
    nodes: Vec<NodeState<'a>>,
    insts: Vec<Inst<'a>>,
    net: &'a NetworkConfig,
    p_succ: f64,
    t_cycle: u64,
    store: QubitStore,
    last_touch: BTreeMap<u32, u64>,
    rng: ChaCha8Rng,
    heap: BinaryHeap<Reverse<(u64, u64, Ev)>>,
    seq: u64,
    wakes: BTreeSet<u64>,
    now: u64,
    record: bool,
    events: Vec<TraceEvent>,
    stalled: u64,
}

/// Runs every instance to completion.
///
/// Blocks run without preemption. A block dispatched at `t` occupies its
/// processor from `t`; its work starts after the dispatch overhead. QC
/// blocks hold the QPS while attempting in their application's bins and
/// give it back (a `yield` event) when a bin ends without the pairs they
/// need; they are dispatched again in a later bin.
pub fn run_simulation(
    nodes: &[NodeConfig],
    instances: &[InstanceSpec],
    net: &NetworkConfig,
    opts: &SimOptions,
) -> Result<Trace, SimError> {
    let mut sim = Sim::new(nodes, instances, net, opts)?;
    sim.run(opts.max_time_ns)?;
    Ok(sim.finish())
}

fn proc_of(t: BlockType) -> Proc {
    if t.is_quantum() {
        Proc::Qps
    } else {
        Proc::Cps
    }
}

impl<'a> Sim<'a> {
    fn new(
        nodes: &'a [NodeConfig],
        instances: &'a [InstanceSpec],
        net: &'a NetworkConfig,
        opts: &SimOptions,
    ) -> Result<Self, SimError> {
        let mut node_states: Vec<NodeState<'a>> = nodes
            .iter()
            .map(|cfg| NodeState {
                cfg,
                cps: None,
                qps: None,
                lock: None,
                free_phys: (0..cfg.num_qubits as u32).collect(),
                instances: Vec::new(),
            })
            .collect();
        let node_index: BTreeMap<&NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (&n.id, i)).collect();

        let mut insts = Vec::with_capacity(instances.len());
        for (i, spec) in instances.iter().enumerate() {
            let prog = &spec.program;
            let report = validate(prog);
            if let Some(v) = report.violations.first() {
                return Err(SimError::InvalidProgram { program: prog.name.clone(), detail: format!("{v:?}") });
            }
            let node = *node_index
                .get(&prog.node)
                .ok_or_else(|| SimError::UnknownNode(prog.name.clone(), prog.node.to_string()))?;
            node_states[node].instances.push(i);

            let mut routes = BTreeMap::new();
            for ins in prog.blocks.iter().flat_map(|b| &b.instrs) {
                let peer = match ins {
                    Instruction::SendMsg { peer, .. }
                    | Instruction::RecvMsg { peer, .. }
                    | Instruction::EprRequest { peer, .. } => peer,
                    _ => continue,
                };
                if routes.contains_key(peer) {
                    continue;
                }
                let found: Vec<usize> = instances
                    .iter()
                    .enumerate()
                    .filter(|(j, o)| *j != i && o.program.node == *peer && spec.app.is_some() && o.app == spec.app)
                    .map(|(j, _)| j)
                    .collect();
                match found.as_slice() {
                    [j] => {
                        routes.insert(peer.clone(), *j);
                    }
                    _ => {
                        return Err(SimError::Routing(format!(
                            "`{}` names peer `{peer}` but {} instances of its app run there",
                            prog.name,
                            found.len()
                        )))
                    }
                }
            }

            let n = prog.blocks.len();
            let preds = prog.predecessor_indices();
            let mut succs = vec![Vec::new(); n];
            for (b, ps) in preds.iter().enumerate() {
                for &p in ps {
                    succs[p].push(b);
                }
            }
            let mut recv_needs = Vec::with_capacity(n);
            for b in &prog.blocks {
                let mut need: BTreeMap<usize, usize> = BTreeMap::new();
                for ins in &b.instrs {
                    if let Instruction::RecvMsg { peer, .. } = ins {
                        *need.entry(routes[peer]).or_default() += 1;
                    }
                }
                if b.btype == BlockType::QC && b.instrs.len() != 1 {
                    return Err(SimError::InvalidProgram {
                        program: prog.name.clone(),
                        detail: format!("QC block {} must hold exactly one EPR request", b.id),
                    });
                }
                recv_needs.push(need.into_iter().collect());
            }
            let sections = prog
                .critical_sections
                .iter()
                .filter_map(|s| Some((prog.index_of(s.first)?, prog.index_of(s.last)?)))
                .collect();
            let vars = prog.variables.iter().filter_map(|d| Some((d.name.clone(), d.init?))).collect();
            let ready = (0..n).filter(|&b| preds[b].is_empty()).map(|b| (b, spec.arrival_ns)).collect();
            insts.push(Inst {
                spec,
                node,
                preds,
                succs,
                done: vec![false; n],
                end_time: vec![0; n],
                ready,
                remaining: n,
                vars,
                qmap: BTreeMap::new(),
                inbox: BTreeMap::new(),
                routes,
                recv_needs,
                sections,
                qc: None,
                qc_delivered: BTreeMap::new(),
                epoch: 0,
                first_start: None,
                last_end: 0,
            });
        }

        for ns in &node_states {
            let needed: usize = ns.instances.iter().map(|&i| instances[i].program.max_live_qubits()).sum();
            if needed > ns.cfg.num_qubits {
                return Err(SimError::Admission { node: ns.cfg.id.to_string(), capacity: ns.cfg.num_qubits, needed });
            }
        }

        let mut sim = Sim {
            nodes: node_states,
            insts,
            net,
            p_succ: net.link.p_succ()?,
            t_cycle: net.link.t_cycle_ns(),
            store: QubitStore::new(),
            last_touch: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(opts.seed),
            heap: BinaryHeap::new(),
            seq: 0,
            wakes: BTreeSet::new(),
            now: 0,
            record: opts.record_trace,
            events: Vec::new(),
            stalled: 0,
        };
        for spec in instances {
            sim.wake_at(spec.arrival_ns);
        }
        Ok(sim)
    }

    fn push(&mut self, t: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Reverse((t, self.seq, ev)));
    }

    fn wake_at(&mut self, t: u64) {
        if self.wakes.insert(t) {
            self.push(t, Ev::Wake);
        }
    }

    fn emit(&mut self, t: u64, node: usize, proc: Proc, instance: usize, bi: usize, kind: EventKind) {
        if self.record {
            let block = self.insts[instance].spec.program.blocks[bi].id.0;
            self.events.push(TraceEvent { t, node, proc, instance, block, kind });
        }
    }

    fn err(&self, i: usize, detail: impl Into<String>) -> SimError {
        SimError::Execution { instance: self.insts[i].spec.program.name.clone(), detail: detail.into() }
    }

    fn run(&mut self, max_time: u64) -> Result<(), SimError> {
        while let Some(Reverse((t, _, ev))) = self.heap.pop() {
            if t > max_time {
                return Err(SimError::Timeout(max_time));
            }
            self.now = t;
            self.handle(ev)?;
            while let Some(&Reverse((t2, _, ev2))) = self.heap.peek() {
                if t2 != t {
                    break;
                }
                self.heap.pop();
                self.handle(ev2)?;
            }
            for n in 0..self.nodes.len() {
                self.dispatch(n)?;
            }
            self.pair_generation()?;
            if self.stalled > MAX_STALLED_YIELDS {
                break;
            }
        }
        let blocked: Vec<String> = self
            .insts
            .iter()
            .filter(|s| s.remaining > 0)
            .map(|s| {
                let waiting: Vec<String> = s.ready.keys().map(|&b| s.spec.program.blocks[b].id.to_string()).collect();
                format!("{} on {}: ready blocks [{}]", s.spec.program.name, s.spec.program.node, waiting.join(","))
            })
            .collect();
        if blocked.is_empty() {
            Ok(())
        } else {
            Err(SimError::Deadlock { time_ns: self.now, blocked })
        }
    }

    fn handle(&mut self, ev: Ev) -> Result<(), SimError> {
        match ev {
            Ev::Wake => {
                self.wakes.remove(&self.now);
            }
            Ev::Done { inst, bi } => self.complete(inst, bi),
            Ev::QcBinEnd { inst, epoch } => {
                let waiting = self.insts[inst].qc.as_ref().is_some_and(|q| !q.generating);
                if waiting && self.insts[inst].epoch == epoch {
                    self.yield_qc(inst);
                }
            }
            Ev::QcResult { a, b, success } => {
                if success {
                    self.deliver_pair(a, b)?;
                    for i in [a, b] {
                        self.after_pair(i);
                    }
                } else {
                    self.yield_qc(a);
                    self.yield_qc(b);
                }
            }
        }
        Ok(())
    }

    fn candidates(&mut self, n: usize) -> Vec<Candidate> {
        let now = self.now;
        let timing = self.nodes[n].cfg.timing;
        let (cps_free, qps_free) = (self.nodes[n].cps.is_none(), self.nodes[n].qps.is_none());
        let lock = self.nodes[n].lock;
        let mut out = Vec::new();
        let mut wakes = Vec::new();
        for &i in &self.nodes[n].instances {
            if lock.is_some_and(|l| l != i) {
                continue;
            }
            let inst = &self.insts[i];
            for (&bi, &ready_t) in &inst.ready {
                if ready_t > now {
                    continue;
                }
                let block = &inst.spec.program.blocks[bi];
                let free = if block.btype.is_quantum() { qps_free } else { cps_free };
                if !free {
                    continue;
                }
                let mut ready_ns = ready_t;
                let mut ok = true;
                for &(from, count) in &inst.recv_needs[bi] {
                    match inst.inbox.get(&from).and_then(|q| q.get(count - 1)) {
                        Some(&(arrival, _)) if arrival <= now => ready_ns = ready_ns.max(arrival),
                        _ => ok = false,
                    }
                }
                if block.btype == BlockType::QC {
                    let app = inst.spec.app.expect("routing guarantees an app");
                    let sched = &self.net.schedule;
                    let owned = sched.owner_at(now) == app;
                    if !owned || sched.bin_end(now) < now + timing.sched_msg_ns + self.t_cycle {
                        ok = false;
                        let from = if owned { sched.bin_end(now) } else { now };
                        if let Some(t) = sched.next_owned_start(app, from) {
                            wakes.push(t);
                        }
                    }
                }
                if !ok {
                    continue;
                }
                let deadline = block.deadline.map(|d| {
                    let base = inst.preds[bi].iter().map(|&p| inst.end_time[p]).max().unwrap_or(inst.spec.arrival_ns);
                    base + d
                });
                out.push(Candidate { instance: i, block_index: bi, deadline, ready_ns });
            }
        }
        for t in wakes {
            self.wake_at(t);
        }
        out
    }

    fn dispatch(&mut self, n: usize) -> Result<(), SimError> {
        loop {
            let cands = self.candidates(n);
            let Some(c) = edf_select(&cands) else {
                return Ok(());
            };
            self.start_block(c)?;
        }
    }

    fn start_block(&mut self, c: Candidate) -> Result<(), SimError> {
        let (i, bi, now) = (c.instance, c.block_index, self.now);
        let spec = self.insts[i].spec;
        let block = &spec.program.blocks[bi];
        let node = self.insts[i].node;
        let work = now + self.nodes[node].cfg.timing.sched_msg_ns;

        let inst = &mut self.insts[i];
        inst.ready.remove(&bi);
        inst.first_start = Some(inst.first_start.map_or(now, |s| s.min(now)));
        if inst.sections.iter().any(|&(f, _)| f == bi) {
            self.nodes[node].lock = Some(i);
        }
        let proc = proc_of(block.btype);
        self.emit(now, node, proc, i, bi, EventKind::Start);
        match proc {
            Proc::Cps => self.nodes[node].cps = Some((i, bi)),
            Proc::Qps => self.nodes[node].qps = Some((i, bi)),
        }
        if block.btype == BlockType::QC {
            let inst = &mut self.insts[i];
            inst.epoch += 1;
            inst.qc = Some(QcState { bi, ready_ns: c.ready_ns, work_start: work, generating: false });
            let epoch = inst.epoch;
            let end = self.net.schedule.bin_end(now);
            self.push(end, Ev::QcBinEnd { inst: i, epoch });
            return Ok(());
        }
        let timing = self.nodes[node].cfg.timing;
        let mut t = work + block.load.len() as u64 * timing.quantum_instr_ns;
        for ins in &block.instrs {
            t += instruction_duration(ins, &timing);
            self.apply(i, bi, ins, t)?;
        }
        self.push(t, Ev::Done { inst: i, bi });
        Ok(())
    }

    fn eval(&self, i: usize, e: &AngleExpr) -> Result<f64, SimError> {
        let vars = &self.insts[i].vars;
        e.eval(|v| vars.get(v).copied()).map_err(|err| self.err(i, err.to_string()))
    }

    fn var(&self, i: usize, v: &Var) -> Result<f64, SimError> {
        self.insts[i].vars.get(v).copied().ok_or_else(|| self.err(i, format!("variable `{v}` has no value")))
    }

    fn key(&self, i: usize, q: QubitId) -> Result<u32, SimError> {
        self.insts[i].qmap.get(&q).copied().ok_or_else(|| self.err(i, format!("{q} is not live")))
    }

    fn alloc_phys(&mut self, i: usize) -> Result<u32, SimError> {
        let node = self.insts[i].node;
        let ns = &mut self.nodes[node];
        let Some(p) = ns.free_phys.pop_first() else {
            return Err(SimError::Admission {
                node: ns.cfg.id.to_string(),
                capacity: ns.cfg.num_qubits,
                needed: ns.cfg.num_qubits + 1,
            });
        };
        Ok((node as u32) << NODE_SHIFT | p)
    }

    fn release(&mut self, i: usize, q: QubitId, key: u32) {
        self.insts[i].qmap.remove(&q);
        self.last_touch.remove(&key);
        let node = (key >> NODE_SHIFT) as usize;
        self.nodes[node].free_phys.insert(key & ((1 << NODE_SHIFT) - 1));
    }

    /// Dephases `key` for the time since it was last touched.
    fn idle(&mut self, i: usize, key: u32, t: u64) -> Result<(), SimError> {
        let last = self.last_touch[&key];
        let dt = t.checked_sub(last).ok_or_else(|| self.err(i, format!("qubit touched at {t} after {last}")))?;
        if dt > 0 {
            let noise = self.nodes[(key >> NODE_SHIFT) as usize].cfg.noise;
            self.store.dephase(key, noise.dephase_factor(dt)).map_err(|e| self.err(i, e.to_string()))?;
        }
        self.last_touch.insert(key, t);
        Ok(())
    }

    /// Applies the effect of one instruction finishing at `t`. Effects are
    /// applied at dispatch; nothing else can observe them before `t`.
    fn apply(&mut self, i: usize, bi: usize, ins: &Instruction, t: u64) -> Result<(), SimError> {
        let node = self.insts[i].node;
        match ins {
            Instruction::ClassicalCompute { assign: Some((v, e)), .. } => {
                let x = self.eval(i, e)?;
                self.insts[i].vars.insert(v.clone(), x);
            }
            Instruction::ClassicalCompute { assign: None, .. } => {}
            Instruction::SendMsg { peer, payload } => {
                let x = self.var(i, payload)?;
                let to = self.insts[i].routes[peer];
                let arrival = t + self.net.latency_ns;
                self.insts[to].inbox.entry(i).or_default().push_back((arrival, x));
                self.emit(t, node, Proc::Cps, i, bi, EventKind::MsgSend { to, arrival });
                self.wake_at(arrival);
            }
            Instruction::RecvMsg { peer, dest } => {
                let from = self.insts[i].routes[peer];
                let (_, x) = self.insts[i]
                    .inbox
                    .get_mut(&from)
                    .and_then(VecDeque::pop_front)
                    .ok_or_else(|| self.err(i, format!("no message from `{peer}`")))?;
                self.insts[i].vars.insert(dest.clone(), x);
                self.emit(t, node, Proc::Cps, i, bi, EventKind::MsgRecv { from });
            }
            Instruction::QAlloc { qubit, init } => {
                let key = self.alloc_phys(i)?;
                self.store.alloc(key, *init).map_err(|e| self.err(i, e.to_string()))?;
                self.insts[i].qmap.insert(*qubit, key);
                self.last_touch.insert(key, t);
            }
            Instruction::QGate { gate, qubits } => {
                let keys = qubits.iter().map(|&q| self.key(i, q)).collect::<Result<Vec<_>, _>>()?;
                let angle = match gate.angle() {
                    Some(e) => self.eval(i, e)?,
                    None => 0.0,
                };
                for &k in &keys {
                    self.idle(i, k, t)?;
                }
                let noise = self.nodes[node].cfg.noise;
                self.store.apply_gate(gate, angle, &keys, &noise).map_err(|e| self.err(i, e.to_string()))?;
            }
            Instruction::QMeasure { qubit, basis, dest } => {
                let key = self.key(i, *qubit)?;
                self.idle(i, key, t)?;
                let u: f64 = self.rng.random();
                let bit = self.store.measure(key, *basis, u).map_err(|e| self.err(i, e.to_string()))?;
                self.insts[i].vars.insert(dest.clone(), f64::from(bit));
                self.release(i, *qubit, key);
            }
            Instruction::QFree { qubit } => {
                let key = self.key(i, *qubit)?;
                self.store.free(key).map_err(|e| self.err(i, e.to_string()))?;
                self.release(i, *qubit, key);
            }
            Instruction::EprRequest { .. } => return Err(self.err(i, "EPR request outside a QC block")),
        }
        Ok(())
    }

    fn complete(&mut self, i: usize, bi: usize) {
        let now = self.now;
        let node = self.insts[i].node;
        let btype = self.insts[i].spec.program.blocks[bi].btype;
        let proc = proc_of(btype);
        self.emit(now, node, proc, i, bi, EventKind::End);
        match proc {
            Proc::Cps => self.nodes[node].cps = None,
            Proc::Qps => self.nodes[node].qps = None,
        }
        let inst = &mut self.insts[i];
        inst.done[bi] = true;
        inst.end_time[bi] = now;
        inst.last_end = inst.last_end.max(now);
        inst.remaining -= 1;
        self.stalled = 0;
        for k in 0..inst.succs[bi].len() {
            let s = inst.succs[bi][k];
            if inst.preds[s].iter().all(|&p| inst.done[p]) {
                inst.ready.insert(s, now);
            }
        }
        if inst.sections.iter().any(|&(_, l)| l == bi) && self.nodes[node].lock == Some(i) {
            self.nodes[node].lock = None;
        }
    }

    fn yield_qc(&mut self, i: usize) {
        let Some(qc) = self.insts[i].qc.take() else {
            return;
        };
        let node = self.insts[i].node;
        self.emit(self.now, node, Proc::Qps, i, qc.bi, EventKind::Yield);
        self.nodes[node].qps = None;
        self.stalled += 1;
        let inst = &mut self.insts[i];
        inst.epoch += 1;
        inst.ready.insert(qc.bi, qc.ready_ns);
    }

    fn request(&self, i: usize, bi: usize) -> (&'a NodeId, u32, &'a [QubitId]) {
        let spec: &'a InstanceSpec = self.insts[i].spec;
        match &spec.program.blocks[bi].instrs[0] {
            Instruction::EprRequest { peer, count, qubits } => (peer, *count, qubits.as_slice()),
            _ => unreachable!("checked at admission"),
        }
    }

    fn pair_generation(&mut self) -> Result<(), SimError> {
        for a in 0..self.insts.len() {
            let Some(qa) = self.insts[a].qc.as_ref().filter(|q| !q.generating) else {
                continue;
            };
            let (peer, _, _) = self.request(a, qa.bi);
            let b = self.insts[a].routes[peer];
            let Some(qb) = self.insts[b].qc.as_ref().filter(|q| !q.generating) else {
                continue;
            };
            let (back, _, _) = self.request(b, qb.bi);
            if *back != self.insts[a].spec.program.node {
                continue;
            }
            let t0 = self.now.max(qa.work_start).max(qb.work_start);
            let app = self.insts[a].spec.app.expect("routed");
            let sched = &self.net.schedule;
            let remaining = if sched.owner_at(t0) == app { sched.bin_end(t0) - t0 } else { 0 };
            let outcome = sample_epr(self.p_succ, self.t_cycle, remaining, &mut self.rng);
            let (elapsed, attempts, success) = match outcome {
                EprOutcome::Success { elapsed_ns, attempts } => (elapsed_ns, attempts, true),
                EprOutcome::BinExpired { elapsed_ns, attempts } => (elapsed_ns, attempts, false),
            };
            for i in [a, b] {
                let inst = &mut self.insts[i];
                inst.epoch += 1;
                let qc = inst.qc.as_mut().expect("checked above");
                qc.generating = true;
                let bi = qc.bi;
                if attempts > 0 {
                    let node = inst.node;
                    let kind = EventKind::EprAttempt { until: t0 + elapsed, attempts, success };
                    self.emit(t0, node, Proc::Qps, i, bi, kind);
                }
            }
            self.push(t0 + elapsed, Ev::QcResult { a, b, success });
        }
        Ok(())
    }

    fn deliver_pair(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        let mut keys = [0u32; 2];
        for (slot, i) in [a, b].into_iter().enumerate() {
            let bi = self.insts[i].qc.as_ref().expect("generating").bi;
            let (_, _, qubits) = self.request(i, bi);
            let k = *self.insts[i].qc_delivered.get(&bi).unwrap_or(&0) as usize;
            let q = *qubits.get(k).ok_or_else(|| self.err(i, "more pairs than requested"))?;
            let key = self.alloc_phys(i)?;
            self.insts[i].qmap.insert(q, key);
            self.last_touch.insert(key, self.now);
            keys[slot] = key;
        }
        let node = self.insts[a].node.min(self.insts[b].node);
        let fidelity = self.nodes[node].cfg.noise.pair_fidelity;
        self.store.add_pair(keys[0], keys[1], fidelity).map_err(|e| self.err(a, e.to_string()))
    }

    fn after_pair(&mut self, i: usize) {
        let bi = self.insts[i].qc.as_ref().expect("generating").bi;
        let (_, count, _) = self.request(i, bi);
        let inst = &mut self.insts[i];
        let delivered = inst.qc_delivered.entry(bi).or_insert(0);
        *delivered += 1;
        if *delivered >= count {
            inst.qc_delivered.remove(&bi);
            inst.qc = None;
            inst.epoch += 1;
            self.complete(i, bi);
        } else {
            inst.epoch += 1;
            let epoch = inst.epoch;
            let qc = inst.qc.as_mut().expect("generating");
            qc.generating = false;
            qc.work_start = self.now;
            let end = self.net.schedule.bin_end(self.now);
            self.push(end, Ev::QcBinEnd { inst: i, epoch });
        }
    }

    fn finish(mut self) -> Trace {
        self.events.sort_by_key(|e| e.t);
        let instances = self
            .insts
            .iter()
            .map(|s| {
                let success = (!s.spec.checks.is_empty()).then(|| {
                    s.spec.checks.iter().all(|c| {
                        s.vars.get(&c.var).is_some_and(|&v| ((v.round() as u8) ^ u8::from(c.flip)) == c.expected)
                    })
                });
                let first = s.first_start.unwrap_or(s.spec.arrival_ns);
                InstanceReport {
                    name: s.spec.program.name.clone(),
                    node: s.spec.program.node.to_string(),
                    app: s.spec.app,
                    first_start_ns: first,
                    last_end_ns: s.last_end.max(first),
                    success,
                }
            })
            .collect();
        Trace { events: self.events, instances }
    }
}
